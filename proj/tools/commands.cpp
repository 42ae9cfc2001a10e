#include "commands.hpp"

#include "wq/attention.hpp"
#include "wq/data.hpp"
#include "wq/decompose.hpp"
#include "wq/error.hpp"
#include "wq/forecast.hpp"
#include "wq/superstat.hpp"
#include "wq/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wq::cli {

namespace {

using json = nlohmann::ordered_json;
namespace ss = wq::superstat;
namespace fc = wq::forecast;

std::string num(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& path, const std::string& text, Context& ctx) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream o(path, std::ios::binary);
    if (!o) throw DataError("cannot write " + path.string());
    o << text;
    if (!o) throw DataError("write failed: " + path.string());
    ctx.out << "wrote " << path.generic_string() << '\n';
}

void write_json(const fs::path& path, const json& j, Context& ctx) { write_text(path, j.dump(2) + "\n", ctx); }

/// "S1.clean.csv" -> "S1"
std::string site_of(const std::string& explicit_site, const std::string& input) {
    if (!explicit_site.empty()) return explicit_site;
    auto name = fs::path(input).filename().string();
    return name.substr(0, name.find('.'));
}

data::SeriesSet load_set(const std::string& input, const std::string& rainfall) {
    auto set = data::read_grid_csv(read_text(input));
    if (!rainfall.empty()) data::attach_rainfall(set, data::parse_rainfall_csv(read_text(rainfall)));
    return set;
}

const TimeSeries& series_of(const data::SeriesSet& set, const std::string& indicator, const std::string& input) {
    auto it = set.find(indicator);
    if (it == set.end()) throw DataError("indicator " + indicator + " not found in " + input);
    return it->second;
}

std::vector<TimeSeries> usable_segments(const TimeSeries& series, const SegmentOptions& o) {
    auto split = data::segment_contiguous(series, o.max_gap);
    std::vector<TimeSeries> out;
    std::size_t longest = 0;
    for (auto& s : split.segments) {
        longest = std::max(longest, s.size());
        if (s.size() >= o.min_segment) out.push_back(std::move(s));
    }
    if (out.empty())
        throw InsufficientDataError("no contiguous run of " + series.indicator() + " reaches " +
                                    std::to_string(o.min_segment) + " samples (longest " + std::to_string(longest) +
                                    ")");
    return out;
}

json segments_json(const std::vector<TimeSeries>& segs) {
    json a = json::array();
    for (const auto& s : segs) a.push_back({{"start", format_instant(s.start())}, {"length", s.size()}});
    return a;
}

ss::DetrendSpec parse_spec(const std::string& label) {
    auto us = label.find('_');
    if (us == std::string::npos) throw ParameterError("unknown detrending method '" + label + "'");
    auto a = label.substr(0, us), b = label.substr(us + 1);
    try {
        return {decompose::parse_method(b), decompose::parse_mode(a)};
    } catch (const ParameterError&) {
        try {
            return {decompose::parse_method(a), decompose::parse_mode(b)};
        } catch (const ParameterError&) {
            throw ParameterError("unknown detrending method '" + label + "'");
        }
    }
}

std::vector<ss::DetrendSpec> parse_specs(const std::vector<std::string>& labels) {
    std::vector<ss::DetrendSpec> out;
    for (const auto& l : labels) {
        if (l == "all") {
            for (const auto& s : ss::all_detrendings()) out.push_back(s);
        } else {
            out.push_back(parse_spec(l));
        }
    }
    if (out.empty()) throw ParameterError("no detrending method selected");
    return out;
}

json fit_json(const ss::FitResult& f) {
    return {{"q", f.params.q},
            {"beta", f.params.beta},
            {"mu", f.params.mu},
            {"loglik", f.loglik},
            {"loglik_per_sample", f.loglik_per_sample()},
            {"n_samples", f.n_samples},
            {"converged", f.converged},
            {"iterations", f.iterations}};
}

std::vector<double> read_column(const std::string& path, const std::string& wanted) {
    auto text = read_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError(path + " is empty");
    auto split = [](const std::string& row) {
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            auto c = row.find(',', pos);
            cells.push_back(row.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        for (auto& cell : cells)
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        return cells;
    };
    auto header = split(line);
    std::size_t col = header.size();
    auto find = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    if (!wanted.empty()) {
        col = find(wanted);
        if (col == header.size()) throw SchemaError("column " + wanted + " not found in " + path);
    } else {
        for (const char* c : {"centered", "value"})
            if ((col = find(c)) < header.size()) break;
        if (col == header.size()) throw SchemaError(path + " has neither a 'centered' nor a 'value' column");
    }
    std::vector<double> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (col >= cells.size() || cells[col].empty()) continue;
        const auto& c = cells[col];
        double v = 0;
        auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
        if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
            throw DataError(path + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
        out.push_back(v);
    }
    return out;
}

double quantile(std::vector<double> v, double p) {
    auto k = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

std::pair<std::size_t, std::size_t> parse_cell(const std::string& s) {
    auto us = s.find('_');
    std::size_t a = 0, b = 0;
    if (us != std::string::npos) {
        auto r1 = std::from_chars(s.data(), s.data() + us, a);
        auto r2 = std::from_chars(s.data() + us + 1, s.data() + s.size(), b);
        if (r1.ec == std::errc() && r2.ec == std::errc() && r2.ptr == s.data() + s.size() && a > 0 && b > 0)
            return {a, b};
    }
    throw UsageError("--dump expects <input_len>_<horizon>, got '" + s + "'");
}

json trend_json(const std::vector<std::pair<double, double>>& pts) {
    try {
        auto t = ss::linear_trend(pts);
        json p = json::array();
        for (const auto& [x, y] : t.points) p.push_back({x, y});
        return {{"slope", t.slope},
                {"intercept", t.intercept},
                {"pearson_r", t.pearson_r},
                {"slope_stderr", t.slope_stderr},
                {"points", p}};
    } catch (const Error& e) {
        return {{"error", e.what()}};
    }
}

}  // namespace

void run_clean(const CleanOptions& o, Context& ctx) {
    data::Schema schema;
    if (!o.schema.empty()) schema = data::parse_schema_json(read_text(o.schema));
    auto parsed = data::parse_site_csv(read_text(o.input), schema);

    data::CleanConfig cfg;
    cfg.do_max = o.do_max;
    cfg.spike_window = o.spike_window;
    cfg.spike_k = o.spike_k;
    cfg.spike_indicators = o.spike_indicators;
    if (o.drop_nonpositive_set) cfg.drop_nonpositive = o.drop_nonpositive;
    for (const auto& w : o.exclude) cfg.exclusion_windows.push_back(data::parse_time_window(w));
    cfg.ec_unit_autodetect = o.ec_autodetect;
    cfg.declared_units = schema.units;
    for (const auto& kv : o.declared_units) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--declared-unit expects INDICATOR=UNIT, got '" + kv + "'");
        cfg.declared_units[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    cfg.validate();

    auto result = data::clean(parsed.records, cfg);
    if (!o.rainfall.empty()) data::attach_rainfall(result.series, data::parse_rainfall_csv(read_text(o.rainfall)));

    const auto site = site_of(o.site, o.input);
    write_text(o.out / (site + ".clean.csv"), data::write_grid_csv(result.series), ctx);
    json j;
    j["site"] = site;
    j["input"] = fs::path(o.input).filename().string();
    j["malformed_rows"] = parsed.malformed_rows;
    j["duplicate_timestamps"] = parsed.duplicate_timestamps;
    j["report"] = json::parse(data::clean_report_json(result.report));
    write_json(o.out / (site + ".clean_report.json"), j, ctx);

    for (const auto& [name, ir] : result.report.indicators) {
        ctx.out << name << ": raw " << ir.raw << ", surviving " << ir.surviving;
        for (const auto& [rule, n] : ir.removed) ctx.out << ", " << rule << ' ' << n;
        ctx.out << '\n';
    }
}

void run_detrend(const DetrendOptions& o, Context& ctx) {
    auto set = load_set(o.input, "");
    auto segs = usable_segments(series_of(set, o.seg.indicator, o.input), o.seg);
    const ss::DetrendSpec spec{decompose::parse_method(o.method), decompose::parse_mode(o.mode)};
    const auto f = parse_duration(o.f);

    std::string csv = "timestamp,segment,input,trend,fluctuation,centered\n";
    json parts = json::array();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        auto d = spec.method == decompose::Method::seasonal ? decompose::seasonal_detrend(segs[k], f, spec.mode)
                                                            : decompose::emd_detrend(segs[k], o.m, spec.mode);
        auto centered = ss::centered_fluctuations(d);
        for (std::size_t i = 0; i < d.input.size(); ++i) {
            csv += format_instant(d.input.time_at(i));
            csv += ',' + std::to_string(k);
            for (const auto* s : {&d.input, &d.trend, &d.fluctuation}) {
                csv += ',';
                if ((*s)[i]) csv += num(*(*s)[i]);
            }
            csv += ',' + num(centered[i]) + '\n';
        }
        parts.push_back(json::parse(decompose::decomposition_json(d)));
    }

    const auto site = site_of(o.site, o.input);
    const auto stem = site + "." + spec.label();
    json j;
    j["site"] = site;
    j["indicator"] = o.seg.indicator;
    j["method"] = decompose::to_string(spec.method);
    j["mode"] = decompose::to_string(spec.mode);
    if (spec.method == decompose::Method::seasonal)
        j["params"] = {{"f_seconds", f.count()}};
    else
        j["params"] = {{"m", o.m}};
    j["segments"] = parts;
    write_text(o.out / (stem + ".detrend.csv"), csv, ctx);
    write_json(o.out / (stem + ".detrend.json"), j, ctx);
}

void run_fit(const FitOptions& o, Context& ctx) {
    auto samples = read_column(o.input, o.column);
    auto fit = ss::fit_q_gaussian(samples);

    auto stem = fs::path(o.input).filename().string();
    for (const char* suffix : {".csv", ".detrend"})
        if (stem.size() > std::string_view(suffix).size() && stem.ends_with(suffix))
            stem.resize(stem.size() - std::string_view(suffix).size());

    const double lo = quantile(samples, 0.001), hi = quantile(samples, 0.999);
    if (!(hi > lo)) throw DataError("samples in " + o.input + " are (nearly) constant");
    auto h = ss::empirical_pdf(samples, o.bins, ss::PdfScale::log_y, std::make_pair(lo, hi));
    std::string pdf = "center,empirical_density,fitted_density\n";
    for (std::size_t b = 0; b < h.centers.size(); ++b) {
        pdf += num(h.centers[b]) + ',';
        if (!h.empty[b]) pdf += num(h.density[b]);
        pdf += ',' + num(ss::q_gaussian_pdf(h.centers[b], fit.params)) + '\n';
    }

    json j;
    j["input"] = fs::path(o.input).filename().string();
    j["column"] = o.column.empty() ? "auto" : o.column;
    j["fit"] = fit_json(fit);
    j["histogram"] = {{"bins", o.bins}, {"range", {lo, hi}}, {"scale", "log_y"}};
    write_json(o.out / (stem + ".fit.json"), j, ctx);
    write_text(o.out / (stem + ".pdf.csv"), pdf, ctx);
    ctx.out << "q = " << num(fit.params.q) << ", beta = " << num(fit.params.beta) << ", mu = " << num(fit.params.mu)
            << ", loglik/sample = " << num(fit.loglik_per_sample()) << '\n';
}

void run_compare(const CompareOptions& o, Context& ctx) {
    auto set = load_set(o.input, "");
    auto segs = usable_segments(series_of(set, o.seg.indicator, o.input), o.seg);
    auto specs = parse_specs(o.methods);
    ss::DetrendParams params;
    params.f = parse_duration(o.f);
    params.m = o.m;
    auto results = ss::compare_detrendings(segs, specs, params);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].fit) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return results[a].fit->loglik_per_sample() > results[b].fit->loglik_per_sample();
    });
    std::vector<std::size_t> rank(results.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;

    std::size_t samples = 0;
    for (const auto& s : segs) samples += s.size();
    const auto site = site_of(o.site, o.input);
    json methods = json::array(), ranking = json::array();
    std::string csv = "method,rank,q,beta,mu,loglik_per_sample,n_samples,error\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        json m = {{"method", r.spec.label()}};
        csv += r.spec.label() + ',';
        if (r.fit) {
            m["rank"] = rank[i];
            const json fj = fit_json(*r.fit);
            for (const auto& [k, v] : fj.items()) m[k] = v;
            csv += std::to_string(rank[i]) + ',' + num(r.fit->params.q) + ',' + num(r.fit->params.beta) + ',' +
                   num(r.fit->params.mu) + ',' + num(r.fit->loglik_per_sample()) + ',' +
                   std::to_string(r.fit->n_samples) + ",\n";
        } else {
            m["rank"] = nullptr;
            m["error"] = r.error;
            std::string e = r.error;
            std::replace(e.begin(), e.end(), ',', ';');
            csv += ",,,,,," + e + '\n';
        }
        methods.push_back(m);
    }
    for (auto i : order) ranking.push_back(results[i].spec.label());

    json j;
    j["site"] = site;
    j["indicator"] = o.seg.indicator;
    j["params"] = {{"f_seconds", params.f.count()},
                   {"m", params.m},
                   {"max_gap", o.seg.max_gap},
                   {"min_segment", o.seg.min_segment}};
    j["segments"] = segments_json(segs);
    j["samples"] = samples;
    j["methods"] = methods;
    j["ranking"] = ranking;
    j["best"] = order.empty() ? json(nullptr) : json(results[order.front()].spec.label());
    write_json(o.out / (site + ".compare.json"), j, ctx);
    write_text(o.out / (site + ".compare.csv"), csv, ctx);
    for (auto i : order)
        ctx.out << rank[i] << ". " << results[i].spec.label() << "  loglik/sample "
                << num(results[i].fit->loglik_per_sample()) << "  q " << num(results[i].fit->params.q) << '\n';
    for (const auto& r : results)
        if (!r.fit) ctx.out << "-  " << r.spec.label() << "  failed: " << r.error << '\n';
}

void run_simulate(const SimulateOptions& o, Context& ctx) {
    ss::SuperstatConfig cfg;
    cfg.n_dof = o.n_dof;
    cfg.beta0 = o.beta0;
    cfg.block_len = o.block_len;
    cfg.seed = ctx.child_seed();
    cfg.validate();
    if (o.count == 0) throw ParameterError("count must be positive");
    auto x = ss::sample_superstatistical(cfg, o.count);

    std::string csv = "value\n";
    csv.reserve(o.count * 24);
    for (double v : x) csv += num(v) + '\n';
    auto marginal = ss::marginal_q_gaussian(o.n_dof, o.beta0);
    json j = {{"n_dof", o.n_dof},
              {"beta0", o.beta0},
              {"count", o.count},
              {"block_len", o.block_len},
              {"seed", ctx.seed},
              {"sampler_seed", cfg.seed},
              {"marginal", {{"q", marginal.q}, {"beta", marginal.beta}}}};
    write_text(o.out / "simulated.csv", csv, ctx);
    write_json(o.out / "simulated.json", j, ctx);
}

void run_features(const FeaturesOptions& o, Context& ctx) {
    if (!o.fft && !o.table) throw UsageError("features: pass --fft and/or --table");
    auto set = load_set(o.input, o.rainfall);
    const auto site = site_of(o.site, o.input);

    if (o.fft) {
        auto segs = usable_segments(series_of(set, o.seg.indicator, o.input), o.seg);
        const auto& seg = *std::max_element(segs.begin(), segs.end(),
                                            [](const auto& a, const auto& b) { return a.size() < b.size(); });
        const double step_h = static_cast<double>(seg.step().count()) / 3600.0;
        auto peaks = fc::fft_dominant_periods(seg, o.top_k);
        auto mag = fc::magnitude_spectrum(seg.to_dense());
        const double n = static_cast<double>(seg.size());

        std::string csv = "bin,frequency,period_hours,magnitude\n";
        for (std::size_t k = 0; k < mag.size(); ++k) {
            csv += std::to_string(k) + ',' + num(static_cast<double>(k) / n) + ',';
            if (k > 0) csv += num(n / static_cast<double>(k) * step_h);
            csv += ',' + num(mag[k]) + '\n';
        }
        json p = json::array();
        for (const auto& pk : peaks)
            p.push_back({{"bin", pk.bin},
                         {"frequency", pk.frequency},
                         {"period_samples", pk.period},
                         {"period_hours", pk.period * step_h},
                         {"magnitude", pk.magnitude}});
        json j;
        j["site"] = site;
        j["indicator"] = o.seg.indicator;
        j["segment"] = {{"start", format_instant(seg.start())}, {"length", seg.size()}};
        j["step_seconds"] = seg.step().count();
        j["peaks"] = p;
        write_json(o.out / (site + ".fft.json"), j, ctx);
        write_text(o.out / (site + ".spectrum.csv"), csv, ctx);
        for (const auto& pk : peaks) ctx.out << "period " << num(pk.period * step_h) << " h, |X| " << num(pk.magnitude) << '\n';
    }

    if (o.table) {
        auto t = fc::build_feature_table(set);
        std::string csv = "timestamp";
        for (auto name : fc::covariate_names()) csv += ',' + std::string(name);
        csv += '\n';
        for (std::size_t r = 0; r < t.rows(); ++r) {
            csv += format_instant(t.time[r]);
            for (std::size_t c = 0; c < fc::kCovariates; ++c) {
                csv += ',';
                if (t.valid[r]) csv += num(t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
            csv += '\n';
        }
        write_text(o.out / (site + ".features.csv"), csv, ctx);
    }
}

void run_forecast(const ForecastOptions& o, Context& ctx) {
    if (o.inputs.empty() || o.horizons.empty()) throw UsageError("forecast: --inputs and --horizons must be non-empty");
    auto set = load_set(o.input, o.rainfall);
    auto table = fc::build_feature_table(set);
    auto splits = fc::chronological_split(table, fc::SplitSpec::forecasting());
    auto stats = fc::compute_norm_stats(splits.train);
    fc::EvaluationData data{std::make_shared<const fc::FeatureTable>(fc::zscore(splits.train, stats)),
                            std::make_shared<const fc::FeatureTable>(fc::zscore(splits.test, stats)), stats};

    std::vector<fc::ForecasterFactory> models;
    for (const auto& m : o.models) models.push_back(fc::baseline_factory(m));
    fc::GridSpec grid;
    grid.input_lens = o.inputs;
    grid.horizons = o.horizons;
    grid.repetitions = o.reps;
    grid.batch_size = o.batch_size;
    grid.seed = ctx.child_seed();
    auto metrics = fc::evaluate(models, data, grid);

    const auto site = site_of(o.site, o.input);
    json j;
    j["site"] = site;
    j["seed"] = ctx.seed;
    j["grid_seed"] = grid.seed;
    j["rows"] = {{"train", splits.train.rows()}, {"val", splits.val.rows()}, {"test", splits.test.rows()}};
    j["table"] = json::parse(metrics.to_json());
    write_json(o.out / (site + ".forecast_metrics.json"), j, ctx);
    write_text(o.out / (site + ".forecast_metrics.csv"), metrics.to_csv(), ctx);

    auto [in_len, horizon] = o.dump.empty() ? std::make_pair(o.inputs.front(), o.horizons.front()) : parse_cell(o.dump);
    auto train_w = fc::make_windows(data.train, in_len, horizon, o.batch_size, grid.seed);
    auto test_w = fc::make_windows(data.test, in_len, horizon, o.batch_size, grid.seed);
    std::string dump;
    bool header = true;
    for (const auto& make : models) {
        auto model = make();
        try {
            model->fit(train_w);
            dump += fc::prediction_dump_csv(*model, test_w, stats, header);
            header = false;
        } catch (const Error& e) {
            ctx.err << "warning: no prediction dump for " << model->name() << ": " << e.what() << '\n';
        }
    }
    if (header) dump = "timestamp,y,yhat,model,input_len,horizon\n";
    write_text(o.out / (site + ".predictions.csv"), dump, ctx);
    ctx.out << metrics.to_csv();
}

void run_regress(const RegressOptions& o, Context& ctx) {
    if (o.target != data::indicator::kDO)
        throw ParameterError("same-time regression supports target " + std::string(data::indicator::kDO) +
                             " only, got " + o.target);
    auto set = load_set(o.input, o.rainfall);
    auto ev = fc::evaluate_same_time(fc::build_feature_table(set));

    json coef;
    const auto& names = fc::covariate_names();
    for (std::size_t c = 1; c < fc::kCovariates; ++c) coef[std::string(names[c])] = ev.model.coef(static_cast<Eigen::Index>(c - 1));
    const auto site = site_of(o.site, o.input);
    json j;
    j["site"] = site;
    j["target"] = o.target;
    j["n_train"] = ev.n_train;
    j["n_test"] = ev.n_test;
    j["smape"] = ev.smape;
    j["mae"] = ev.mae;
    j["coefficients_z"] = coef;
    j["intercept_z"] = ev.model.coef(static_cast<Eigen::Index>(fc::kCovariates - 1));
    write_json(o.out / (site + ".regression.json"), j, ctx);
    ctx.out << "SMAPE " << num(ev.smape) << " %, MAE " << num(ev.mae) << '\n';
}

void run_attention(const AttentionOptions& o, Context& ctx) {
    if (o.lq < 1 || o.lk < 1 || o.d < 1) throw ParameterError("--lq, --lk and --d must be positive");
    Eigen::Index u = o.u;
    if (u == 0) u = std::min<Eigen::Index>(o.lq, static_cast<Eigen::Index>(std::ceil(5.0 * std::log(static_cast<double>(o.lq)))));
    u = std::max<Eigen::Index>(u, 1);

    std::normal_distribution<double> g(0.0, 1.0);
    auto draw = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index k = 0; k < c; ++k) m(i, k) = g(ctx.rng);
        return m;
    };
    attention::AttentionInput in;
    in.queries = draw(o.lq, o.d);
    in.keys = draw(o.lk, o.d);
    in.values = draw(o.lk, o.d);
    in.u = u;
    auto res = attention::probsparse_attention(in);

    attention::Heatmap h{res.weights, {}, {}};
    for (long i = 0; i < o.lq; ++i) h.query_labels.push_back("q" + std::to_string(i));
    for (long i = 0; i < o.lk; ++i) h.key_labels.push_back("k" + std::to_string(i));
    json j = {{"lq", o.lq}, {"lk", o.lk}, {"d", o.d}, {"u", u}, {"seed", ctx.seed}};
    j["result"] = json::parse(attention::heatmap_json(res));
    write_text(o.out / "attention.heatmap.csv", attention::heatmap_csv(h), ctx);
    write_json(o.out / "attention.json", j, ctx);
    auto peak = attention::peak_columns(attention::column_means(res.weights));
    ctx.out << "active queries " << res.active_queries.size() << " of " << o.lq << ", peak keys " << peak.first << "-"
            << peak.second << '\n';
}

void run_report(const ReportOptions& o, Context& ctx) {
    fs::path dir = o.artifacts.empty() ? o.out.parent_path() : fs::path(o.artifacts);
    if (dir.empty()) dir = ".";
    auto sites = data::parse_site_catalog(read_text(o.catalog));
    if (sites.empty()) throw EmptyInputError("site catalog " + o.catalog + " lists no sites");

    const std::vector<std::string> kinds{".compare.json", ".forecast_metrics.json", ".regression.json"};
    std::vector<std::string> missing;
    for (const auto& s : sites)
        for (const auto& k : kinds)
            if (!fs::is_regular_file(dir / (s.site_code + k))) missing.push_back(s.site_code + k);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw DataError("report: missing artifact(s) in " + dir.generic_string() + ": " + list);
    }
    auto load = [&](const std::string& name) {
        try {
            return json::parse(read_text((dir / name).string()));
        } catch (const json::exception& e) {
            throw SchemaError("report: " + name + " is not valid JSON: " + e.what());
        }
    };

    json fits = json::array(), comparison = json::array(), regression = json::array(), forecast = json::array();
    json artifacts = json::array(), site_codes = json::array();
    std::vector<std::string> method_order;
    std::map<std::string, std::vector<std::pair<double, double>>> beta_pts, q_pts;
    for (const auto& s : sites) {
        site_codes.push_back(s.site_code);
        for (const auto& k : kinds) artifacts.push_back(s.site_code + k);
        auto cmp = load(s.site_code + ".compare.json");
        for (const auto& m : cmp.at("methods")) {
            auto label = m.at("method").get<std::string>();
            if (std::find(method_order.begin(), method_order.end(), label) == method_order.end())
                method_order.push_back(label);
            if (m.contains("error")) {
                fits.push_back({{"site", s.site_code}, {"method", label}, {"error", m.at("error")}});
                continue;
            }
            double q = m.at("q").get<double>(), beta = m.at("beta").get<double>();
            fits.push_back({{"site", s.site_code},
                            {"dist_to_sea_km", s.dist_to_sea_km},
                            {"method", label},
                            {"q", q},
                            {"beta", beta},
                            {"mu", m.at("mu")},
                            {"loglik_per_sample", m.at("loglik_per_sample")},
                            {"n_samples", m.at("n_samples")}});
            beta_pts[label].emplace_back(s.dist_to_sea_km, beta);
            q_pts[label].emplace_back(s.dist_to_sea_km, q);
        }
        comparison.push_back({{"site", s.site_code}, {"ranking", cmp.at("ranking")}, {"best", cmp.at("best")}});

        auto reg = load(s.site_code + ".regression.json");
        regression.push_back({{"site", s.site_code},
                              {"smape", reg.at("smape")},
                              {"mae", reg.at("mae")},
                              {"n_train", reg.at("n_train")},
                              {"n_test", reg.at("n_test")}});
        auto fm = load(s.site_code + ".forecast_metrics.json");
        forecast.push_back({{"site", s.site_code}, {"table", fm.at("table")}});
    }
    json spatial;
    for (const auto& label : method_order)
        spatial[label] = {{"beta", trend_json(beta_pts[label])}, {"q", trend_json(q_pts[label])}};

    json j;
    j["header"] = {{"seed", ctx.seed},
                   {"generator", "mt19937_64"},
                   {"catalog", fs::path(o.catalog).filename().string()},
                   {"sites", site_codes},
                   {"artifacts", artifacts}};
    j["fits"] = fits;
    j["method_comparison"] = comparison;
    j["spatial_regression"] = spatial;
    j["same_time_regression"] = regression;
    j["forecast"] = forecast;
    write_json(o.out, j, ctx);
}

}  // namespace wq::cli
