#include "wq/forecast.hpp"

#include "csv.hpp"
#include "wq/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace wq::forecast {

const std::array<std::string_view, kCovariates>& covariate_names() {
    static const std::array<std::string_view, kCovariates> names = {
        "DOO-MGL", "TEMP",    "COND",  "PH",           "AMMONIUM",     "TURBIDITY", "RAINFALL",
        "hour",    "weekday", "month", "half_day_sin", "half_day_cos", "year_sin",  "year_cos"};
    return names;
}

CovariateVector build_covariates(Instant t, const IndicatorValues& v) {
    using namespace std::chrono;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto day = floor<days>(t);
    const auto secs_of_day = static_cast<double>((t - day).count());
    const year_month_day ymd{day};
    const auto jan1 = sys_days{ymd.year() / January / 1};
    const auto secs_of_year = static_cast<double>((t - Instant{jan1}).count());
    const unsigned monday_based = (weekday{day}.c_encoding() + 6) % 7;

    const double hour = std::floor(secs_of_day / 3600.0);
    const double half_day = two_pi * std::fmod(secs_of_day, 43200.0) / 43200.0;
    const double year = two_pi * secs_of_year / (365.2425 * 86400.0);

    return {v.dissolved_oxygen,
            v.temperature,
            v.conductivity,
            v.ph,
            v.ammonium,
            v.turbidity,
            v.rainfall,
            hour / 24.0 - 0.5,
            static_cast<double>(monday_based) / 7.0 - 0.5,
            static_cast<double>(static_cast<unsigned>(ymd.month()) - 1) / 12.0 - 0.5,
            std::sin(half_day),
            std::cos(half_day),
            std::sin(year),
            std::cos(year)};
}

std::size_t FeatureTable::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

FeatureTable FeatureTable::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) throw ShapeError("feature table slice out of range");
    FeatureTable out;
    out.time.assign(time.begin() + static_cast<std::ptrdiff_t>(begin), time.begin() + static_cast<std::ptrdiff_t>(end));
    out.valid.assign(valid.begin() + static_cast<std::ptrdiff_t>(begin), valid.begin() + static_cast<std::ptrdiff_t>(end));
    out.values = values.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    return out;
}

FeatureTable build_feature_table(const data::SeriesSet& set) {
    namespace ind = data::indicator;
    const std::array<const char*, 7> needed = {ind::kDO,       ind::kTemp,      ind::kCond,    ind::kPH,
                                               ind::kAmmonium, ind::kTurbidity, ind::kRainfall};
    std::array<const TimeSeries*, 7> cols{};
    for (std::size_t c = 0; c < needed.size(); ++c) {
        auto it = set.find(needed[c]);
        if (it == set.end()) throw SchemaError(std::string("feature table needs indicator ") + needed[c]);
        cols[c] = &it->second;
    }
    const auto& ref = *cols[0];
    for (const auto* s : cols)
        if (s->size() != ref.size() || s->start() != ref.start() || s->step() != ref.step())
            throw ShapeError("indicator '" + s->indicator() + "' is not on the shared grid");

    FeatureTable t;
    const std::size_t n = ref.size();
    t.time.resize(n);
    t.valid.assign(n, false);
    t.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), kCovariates);
    for (std::size_t i = 0; i < n; ++i) {
        t.time[i] = ref.time_at(i);
        bool ok = std::all_of(cols.begin(), cols.end(), [&](const TimeSeries* s) { return (*s)[i].has_value(); });
        if (!ok) continue;
        IndicatorValues v{*(*cols[0])[i], *(*cols[1])[i], *(*cols[2])[i], *(*cols[3])[i],
                          *(*cols[4])[i], *(*cols[5])[i], *(*cols[6])[i]};
        auto row = build_covariates(t.time[i], v);
        for (std::size_t c = 0; c < kCovariates; ++c) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        t.valid[i] = true;
    }
    return t;
}

void SplitSpec::validate() const {
    if (train < 0 || val < 0 || test < 0) throw ParameterError("split fractions must be non-negative");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
}

std::pair<std::size_t, std::size_t> split_points(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    // The small epsilon keeps e.g. (0.7 + 0.2) * 1000 at 900, not 899.
    auto cut = [n](double frac) {
        return std::min(n, static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9)));
    };
    return {cut(spec.train), cut(spec.train + spec.val)};
}

Splits chronological_split(const FeatureTable& table, const SplitSpec& spec, std::size_t min_block) {
    auto [a, b] = split_points(table.rows(), spec);
    Splits s{table.slice(0, a), table.slice(a, b), table.slice(b, table.rows())};
    auto check = [&](const FeatureTable& block, double frac, const char* name) {
        if (frac > 0 && block.rows() < min_block)
            throw InsufficientDataError(std::string(name) + " block has " + std::to_string(block.rows()) +
                                        " rows, fewer than the " + std::to_string(min_block) + " required");
    };
    check(s.train, spec.train, "train");
    check(s.val, spec.val, "validation");
    check(s.test, spec.test, "test");
    return s;
}

double NormStats::normalize(std::size_t c, double v) const {
    return constant[c] ? v : (v - mean[c]) / stddev[c];
}

double NormStats::denormalize(std::size_t c, double v) const {
    return constant[c] ? v : v * stddev[c] + mean[c];
}

NormStats compute_norm_stats(const FeatureTable& train) {
    const std::size_t n = train.valid_count();
    if (n == 0) throw InsufficientDataError("training block has no valid rows");
    NormStats s;
    for (std::size_t c = 0; c < kCovariates; ++c) {
        double sum = 0;
        for (std::size_t i = 0; i < train.rows(); ++i)
            if (train.valid[i]) sum += train.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        double mean = sum / static_cast<double>(n);
        double ss = 0;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            if (!train.valid[i]) continue;
            double d = train.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - mean;
            ss += d * d;
        }
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(ss / static_cast<double>(n));
        s.constant[c] = !(s.stddev[c] > 1e-12 * std::max(1.0, std::abs(mean)));
    }
    return s;
}

namespace {

FeatureTable map_columns(const FeatureTable& table, const NormStats& stats, bool forward) {
    FeatureTable out = table;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        if (!out.valid[i]) continue;
        for (std::size_t c = 0; c < kCovariates; ++c) {
            auto& v = out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            v = forward ? stats.normalize(c, v) : stats.denormalize(c, v);
        }
    }
    return out;
}

}  // namespace

FeatureTable zscore(const FeatureTable& table, const NormStats& stats) { return map_columns(table, stats, true); }
FeatureTable inverse_zscore(const FeatureTable& table, const NormStats& stats) { return map_columns(table, stats, false); }

WindowSet::WindowSet(std::shared_ptr<const FeatureTable> table, std::size_t input_len, std::size_t horizon,
                     std::size_t batch_size, std::uint64_t seed)
    : table_(std::move(table)), input_len_(input_len), horizon_(horizon), batch_size_(batch_size) {
    if (!table_) throw ParameterError("window set needs a feature table");
    if (input_len_ == 0 || horizon_ == 0) throw ParameterError("input_len and horizon must be positive");
    if (batch_size_ == 0) throw ParameterError("batch size must be positive");
    static constexpr std::array<std::size_t, 3> kInputs = {48, 96, 192};
    static constexpr std::array<std::size_t, 4> kHorizons = {1, 12, 24, 48};
    paper_grid_ = std::find(kInputs.begin(), kInputs.end(), input_len_) != kInputs.end() &&
                  std::find(kHorizons.begin(), kHorizons.end(), horizon_) != kHorizons.end();

    const std::size_t need = input_len_ + horizon_;
    const auto& valid = table_->valid;
    std::size_t i = 0;
    while (i < valid.size()) {
        if (!valid[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < valid.size() && valid[j]) ++j;
        std::size_t len = j - i;
        if (len < need) {
            ++skipped_;
        } else {
            for (std::size_t s = i; s + need <= j; ++s) starts_.push_back(s);
        }
        i = j;
    }

    std::vector<std::size_t> order(starts_.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::mt19937_64 gen(seed);
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle implementation.
    for (std::size_t k = order.size(); k > 1; --k) {
        std::size_t r = static_cast<std::size_t>(gen() % k);
        std::swap(order[k - 1], order[r]);
    }
    for (std::size_t k = 0; k < order.size(); k += batch_size_)
        batches_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(k),
                              order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), k + batch_size_)));
}

WindowView WindowSet::input(std::size_t i) const {
    return table_->values.block(static_cast<Eigen::Index>(starts_.at(i)), 0, static_cast<Eigen::Index>(input_len_),
                                kCovariates);
}

std::vector<double> WindowSet::target(std::size_t i) const {
    std::vector<double> out(horizon_);
    const std::size_t base = starts_.at(i) + input_len_;
    for (std::size_t h = 0; h < horizon_; ++h)
        out[h] = table_->values(static_cast<Eigen::Index>(base + h), kDissolvedOxygen);
    return out;
}

Instant WindowSet::input_end(std::size_t i) const { return table_->time[starts_.at(i) + input_len_ - 1]; }

Instant WindowSet::target_time(std::size_t i, std::size_t step) const {
    return table_->time[starts_.at(i) + input_len_ + step];
}

WindowSet make_windows(std::shared_ptr<const FeatureTable> table, std::size_t input_len, std::size_t horizon,
                       std::size_t batch_size, std::uint64_t seed) {
    return WindowSet(std::move(table), input_len, horizon, batch_size, seed);
}

std::vector<double> forecast_last(const WindowView& window, std::size_t horizon) {
    if (window.rows() == 0) throw PreconditionError("empty input window");
    return std::vector<double>(horizon, window(window.rows() - 1, kDissolvedOxygen));
}

std::vector<double> forecast_repeat(const WindowView& window, std::size_t horizon) {
    const auto L = static_cast<std::size_t>(window.rows());
    if (L < kHalfDay)
        throw PreconditionError("Repeat baseline needs at least " + std::to_string(kHalfDay) + " input steps, got " +
                                std::to_string(L));
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h)
        out[h] = window(static_cast<Eigen::Index>(L - kHalfDay + h % kHalfDay), kDissolvedOxygen);
    return out;
}

std::vector<double> LastForecaster::predict(const WindowSet& w, std::size_t i) const {
    return forecast_last(w.input(i), w.horizon());
}

std::vector<double> RepeatForecaster::predict(const WindowSet& w, std::size_t i) const {
    return forecast_repeat(w.input(i), w.horizon());
}

namespace {

Eigen::MatrixXd solve_ridge(const Eigen::MatrixXd& xtx, const Eigen::MatrixXd& xty, double ridge) {
    Eigen::MatrixXd a = xtx;
    a.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-14))
        throw NumericalError("least-squares system is singular even with ridge " + detail::format_double(ridge));
    Eigen::MatrixXd w = ldlt.solve(xty);
    if (!w.allFinite()) throw NumericalError("least-squares solution is not finite");
    return w;
}

}  // namespace

std::vector<double> LinearProjection::predict(const WindowView& window) const {
    const Eigen::Index last = window.rows() - 1;
    Eigen::RowVectorXd x(kCovariates + 1);
    x.head(kCovariates) = window.row(last);
    x(kCovariates) = 1.0;
    Eigen::RowVectorXd y = x * weights;
    return {y.data(), y.data() + y.size()};
}

LinearProjection fit_linear_projection(const WindowSet& train, double ridge) {
    if (train.size() < kCovariates + 1)
        throw InsufficientDataError("linear projection needs at least " + std::to_string(kCovariates + 1) +
                                    " training windows, got " + std::to_string(train.size()));
    const auto p = static_cast<Eigen::Index>(kCovariates + 1);
    const auto h = static_cast<Eigen::Index>(train.horizon());
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(p, h);
    Eigen::VectorXd x(p);
    Eigen::RowVectorXd y(h);
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto in = train.input(i);
        x.head(kCovariates) = in.row(in.rows() - 1).transpose();
        x(kCovariates) = 1.0;
        auto t = train.target(i);
        for (Eigen::Index k = 0; k < h; ++k) y(k) = t[static_cast<std::size_t>(k)];
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
        xty.noalias() += x * y;
    }
    xtx = xtx.selfadjointView<Eigen::Lower>();
    return {solve_ridge(xtx, xty, ridge)};
}

void LinearForecaster::fit(const WindowSet& train) { model_ = fit_linear_projection(train, ridge_); }

std::vector<double> LinearForecaster::predict(const WindowSet& w, std::size_t i) const {
    if (model_.weights.cols() != static_cast<Eigen::Index>(w.horizon()))
        throw PreconditionError("Linear model was fitted for a different horizon");
    return model_.predict(w.input(i));
}

ForecasterFactory baseline_factory(const std::string& name) {
    std::string n = name;
    for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "last") return [] { return std::make_unique<LastForecaster>(); };
    if (n == "repeat") return [] { return std::make_unique<RepeatForecaster>(); };
    if (n == "linear") return [] { return std::make_unique<LinearForecaster>(); };
    throw ParameterError("unknown forecasting model '" + name + "'");
}

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw ParameterError("metric inputs differ in length (" + std::to_string(y.size()) + " vs " +
                             std::to_string(yhat.size()) + ")");
    if (y.empty()) throw ParameterError("metric inputs are empty");
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double smape(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double den = std::abs(y[i]) + std::abs(yhat[i]);
        if (den > 0) s += std::abs(y[i] - yhat[i]) / den;
    }
    return 100.0 * s / static_cast<double>(y.size());
}

double SameTimeRegression::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    double y = coef(static_cast<Eigen::Index>(kCovariates - 1));
    for (std::size_t c = 1; c < kCovariates; ++c) y += coef(static_cast<Eigen::Index>(c - 1)) * row(static_cast<Eigen::Index>(c));
    return y;
}

SameTimeRegression fit_same_time_linreg(const FeatureTable& train, double ridge) {
    const std::size_t n = train.valid_count();
    if (n < kCovariates)
        throw InsufficientDataError("same-time regression needs at least " + std::to_string(kCovariates) +
                                    " training rows, got " + std::to_string(n));
    const auto p = static_cast<Eigen::Index>(kCovariates);  // 13 covariates + bias
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(p, 1);
    Eigen::VectorXd x(p);
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (!train.valid[i]) continue;
        auto row = train.values.row(static_cast<Eigen::Index>(i));
        x.head(p - 1) = row.tail(p - 1).transpose();
        x(p - 1) = 1.0;
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
        xty.col(0).noalias() += x * row(kDissolvedOxygen);
    }
    xtx = xtx.selfadjointView<Eigen::Lower>();
    return {solve_ridge(xtx, xty, ridge).col(0)};
}

RegressionEvaluation evaluate_same_time(const FeatureTable& table, const SplitSpec& spec) {
    auto s = chronological_split(table, spec);
    RegressionEvaluation ev;
    ev.stats = compute_norm_stats(s.train);
    ev.model = fit_same_time_linreg(zscore(s.train, ev.stats));
    ev.n_train = s.train.valid_count();
    auto test = zscore(s.test, ev.stats);
    std::vector<double> y, yhat;
    for (std::size_t i = 0; i < test.rows(); ++i) {
        if (!test.valid[i]) continue;
        Eigen::RowVectorXd row = test.values.row(static_cast<Eigen::Index>(i));
        y.push_back(s.test.values(static_cast<Eigen::Index>(i), kDissolvedOxygen));
        yhat.push_back(ev.stats.denormalize(kDissolvedOxygen, ev.model.predict(row)));
    }
    if (y.empty()) throw InsufficientDataError("test block has no valid rows");
    ev.n_test = y.size();
    ev.smape = smape(y, yhat);
    ev.mae = mae(y, yhat);
    return ev;
}

MetricsTable evaluate(const std::vector<ForecasterFactory>& models, const EvaluationData& data, const GridSpec& grid) {
    if (!data.train || !data.test) throw ParameterError("evaluation needs train and test tables");
    if (data.test->valid_count() == 0) throw InsufficientDataError("test split is empty");
    MetricsTable table;
    for (const auto& factory : models) table.models.push_back(factory()->name());

    for (auto L : grid.input_lens) {
        for (auto H : grid.horizons) {
            auto& cell = table.cells[{L, H}];
            std::optional<WindowSet> train_ws, test_ws;
            std::string setup_error;
            try {
                train_ws.emplace(data.train, L, H, grid.batch_size, grid.seed);
                test_ws.emplace(data.test, L, H, grid.batch_size, grid.seed);
                if (test_ws->size() == 0) throw InsufficientDataError("no test windows for this cell");
            } catch (const Error& e) {
                setup_error = e.what();
            }
            for (const auto& factory : models) {
                auto probe = factory();
                CellMetrics m;
                if (!setup_error.empty()) {
                    m.error = setup_error;
                    cell[probe->name()] = m;
                    continue;
                }
                try {
                    const std::size_t reps = probe->stochastic() ? std::max<std::size_t>(1, grid.repetitions) : 1;
                    for (std::size_t r = 0; r < reps; ++r) {
                        auto model = r == 0 ? std::move(probe) : factory();
                        model->fit(*train_ws);
                        std::vector<double> y, yhat, yn, yhatn;
                        y.reserve(test_ws->size() * H);
                        for (std::size_t i = 0; i < test_ws->size(); ++i) {
                            auto t = test_ws->target(i);
                            auto p = model->predict(*test_ws, i);
                            if (p.size() != t.size()) throw ShapeError("model returned the wrong horizon");
                            for (std::size_t k = 0; k < t.size(); ++k) {
                                yn.push_back(t[k]);
                                yhatn.push_back(p[k]);
                                y.push_back(data.stats.denormalize(kDissolvedOxygen, t[k]));
                                yhat.push_back(data.stats.denormalize(kDissolvedOxygen, p[k]));
                            }
                        }
                        m.mae += mae(y, yhat);
                        m.smape += smape(y, yhat);
                        m.mae_normalized += mae(yn, yhatn);
                        m.smape_normalized += smape(yn, yhatn);
                    }
                    const double d = static_cast<double>(reps);
                    m.mae /= d;
                    m.smape /= d;
                    m.mae_normalized /= d;
                    m.smape_normalized /= d;
                    m.windows = test_ws->size();
                    m.repetitions = grid.repetitions;
                } catch (const Error& e) {
                    m = CellMetrics{};
                    m.error = e.what();
                }
                cell[table.models[&factory - models.data()]] = m;
            }
        }
    }
    return table;
}

std::string MetricsTable::to_csv() const {
    std::string out = "input_pred";
    for (const auto& m : models) out += "," + m + "_MAE," + m + "_SMAPE";
    out += '\n';
    for (const auto& [key, per_model] : cells) {
        out += std::to_string(key.first) + "_" + std::to_string(key.second);
        for (const auto& m : models) {
            auto it = per_model.find(m);
            out += ',';
            if (it != per_model.end() && it->second.error.empty()) out += detail::format_double(it->second.mae);
            out += ',';
            if (it != per_model.end() && it->second.error.empty()) out += detail::format_double(it->second.smape);
        }
        out += '\n';
    }
    return out;
}

std::string MetricsTable::to_json(int indent) const {
    nlohmann::json j;
    j["models"] = models;
    j["cells"] = nlohmann::json::array();
    for (const auto& [key, per_model] : cells) {
        nlohmann::json c;
        c["input_len"] = key.first;
        c["horizon"] = key.second;
        c["input_pred"] = std::to_string(key.first) + "_" + std::to_string(key.second);
        nlohmann::json metrics = nlohmann::json::object();
        for (const auto& [name, m] : per_model) {
            nlohmann::json e = {{"windows", m.windows}, {"repetitions", m.repetitions}};
            if (m.error.empty()) {
                e["mae"] = m.mae;
                e["smape"] = m.smape;
                e["mae_normalized"] = m.mae_normalized;
                e["smape_normalized"] = m.smape_normalized;
            } else {
                e["error"] = m.error;
            }
            metrics[name] = e;
        }
        c["metrics"] = metrics;
        j["cells"].push_back(c);
    }
    return j.dump(indent);
}

std::string prediction_dump_csv(const Forecaster& model, const WindowSet& test, const NormStats& stats, bool header) {
    std::string out = header ? "timestamp,y,yhat,model,input_len,horizon\n" : "";
    std::optional<std::size_t> next_start;
    const std::string tag = "," + model.name() + "," + std::to_string(test.input_len()) + "," +
                            std::to_string(test.horizon()) + "\n";
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::size_t s = test.start_row(i);
        if (next_start && s < *next_start) continue;
        next_start = s + test.horizon();
        auto t = test.target(i);
        auto p = model.predict(test, i);
        for (std::size_t k = 0; k < t.size(); ++k) {
            out += format_instant(test.target_time(i, k));
            out += ',' + detail::format_double(stats.denormalize(kDissolvedOxygen, t[k]));
            out += ',' + detail::format_double(stats.denormalize(kDissolvedOxygen, p[k]));
            out += tag;
        }
    }
    return out;
}

}  // namespace wq::forecast
