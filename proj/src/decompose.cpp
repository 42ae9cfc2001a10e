#include "wq/decompose.hpp"

#include "csv.hpp"
#include "wq/error.hpp"

#include <json.hpp>

#include <cmath>

namespace wq::decompose {

std::string to_string(Mode m) { return m == Mode::additive ? "additive" : "multiplicative"; }
std::string to_string(Method m) { return m == Method::seasonal ? "seasonal" : "emd"; }

Mode parse_mode(const std::string& s) {
    if (s == "additive" || s == "add") return Mode::additive;
    if (s == "multiplicative" || s == "mult") return Mode::multiplicative;
    throw ParameterError("unknown decomposition mode '" + s + "'");
}

Method parse_method(const std::string& s) {
    if (s == "seasonal") return Method::seasonal;
    if (s == "emd") return Method::emd;
    throw ParameterError("unknown decomposition method '" + s + "'");
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
    if (window == 0) throw ParameterError("moving-average window must be at least one sample");
    const std::size_t n = x.size();
    std::vector<double> out(n);
    const bool even = window % 2 == 0;
    const std::size_t half = even ? window / 2 : (window - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = std::min({half, i, n - 1 - i});
        double sum = 0;
        if (even && k == half) {
            for (std::size_t j = i - k + 1; j < i + k; ++j) sum += x[j];
            sum += 0.5 * (x[i - k] + x[i + k]);
            out[i] = sum / static_cast<double>(window);
        } else {
            for (std::size_t j = i - k; j <= i + k; ++j) sum += x[j];
            out[i] = sum / static_cast<double>(2 * k + 1);
        }
    }
    return out;
}

TimeSeries moving_average_trend(const TimeSeries& series, std::chrono::seconds f) {
    if (f < series.step())
        throw ParameterError("filter period " + std::to_string(f.count()) + "s is shorter than the sampling step");
    if (f.count() % series.step().count() != 0)
        throw ParameterError("filter period must be a whole number of sampling steps");
    auto w = static_cast<std::size_t>(f.count() / series.step().count());
    auto x = series.to_dense();
    auto t = moving_average(x, w);
    return TimeSeries::dense(series.indicator(), series.start(), series.step(), t, series.unit());
}

namespace {

void require_positive(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0))
            throw DomainError("multiplicative decomposition needs positive values; first offending index " +
                                  std::to_string(i),
                              i);
}

TimeSeries like(const TimeSeries& ref, std::span<const double> v) {
    return TimeSeries::dense(ref.indicator(), ref.start(), ref.step(), v, ref.unit());
}

}  // namespace

Decomposition seasonal_detrend(const TimeSeries& series, std::chrono::seconds f, Mode mode) {
    auto y = series.to_dense();
    if (mode == Mode::multiplicative) require_positive(y);
    auto trend_series = moving_average_trend(series, f);
    auto trend = trend_series.to_dense();
    std::vector<double> fluct(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        fluct[i] = mode == Mode::additive ? y[i] - trend[i] : y[i] / trend[i];

    Decomposition d;
    d.mode = mode;
    d.method = Method::seasonal;
    d.input = series;
    d.trend = std::move(trend_series);
    d.fluctuation = like(series, fluct);
    d.filter_period = f;
    d.window_samples = static_cast<std::size_t>(f.count() / series.step().count());
    return d;
}

Decomposition emd_detrend(const TimeSeries& series, std::size_t m, Mode mode, const EmdConfig& config) {
    auto y = series.to_dense();
    if (mode == Mode::multiplicative) {
        require_positive(y);
        for (auto& v : y) v = std::log(v);
    }
    auto imfs = emd(y, config);
    return emd_detrend(series, imfs, m, mode);
}

Decomposition emd_detrend(const TimeSeries& series, const ImfSet& set, std::size_t m, Mode mode) {
    const std::size_t n_imf = set.imfs.size();
    if (m < 1 || m > n_imf)
        throw ParameterError("modes dropped m=" + std::to_string(m) + " must lie in [1, N] with N=" +
                             std::to_string(n_imf));
    auto y = series.to_dense();
    if (mode == Mode::multiplicative) {
        require_positive(y);
        for (auto& v : y) v = std::log(v);
    }
    for (const auto& imf : set.imfs)
        if (imf.size() != y.size()) throw ShapeError("IMF length does not match the series");

    std::vector<double> trend(y.size(), 0.0), fluct(y.size());
    for (std::size_t k = 0; k < n_imf - m; ++k)
        for (std::size_t i = 0; i < y.size(); ++i) trend[i] += set.imfs[k][i];
    // Fluctuation = fastest m IMFs + residue, taken as the complement of the
    // trend so that the recomposition identity is exact.
    for (std::size_t i = 0; i < y.size(); ++i) fluct[i] = y[i] - trend[i];
    if (mode == Mode::multiplicative) {
        for (auto& v : trend) v = std::exp(v);
        for (auto& v : fluct) v = std::exp(v);
    }

    Decomposition d;
    d.mode = mode;
    d.method = Method::emd;
    d.input = series;
    d.trend = like(series, trend);
    d.fluctuation = like(series, fluct);
    d.modes_dropped = m;
    d.imf_count = n_imf;
    return d;
}

std::string decomposition_csv(const Decomposition& d) {
    std::string out = "timestamp,input,trend,fluctuation\n";
    for (std::size_t i = 0; i < d.input.size(); ++i) {
        out += format_instant(d.input.time_at(i));
        for (const auto* s : {&d.input, &d.trend, &d.fluctuation}) {
            out += ',';
            if ((*s)[i]) out += detail::format_double(*(*s)[i]);
        }
        out += '\n';
    }
    return out;
}

std::string decomposition_json(const Decomposition& d, int indent) {
    nlohmann::json j;
    j["indicator"] = d.input.indicator();
    j["method"] = to_string(d.method);
    j["mode"] = to_string(d.mode);
    j["start"] = format_instant(d.input.start());
    j["step_seconds"] = d.input.step().count();
    j["length"] = d.input.size();
    if (d.method == Method::seasonal) {
        j["params"] = {{"f_seconds", d.filter_period.count()}, {"window_samples", d.window_samples}};
    } else {
        j["params"] = {{"m", d.modes_dropped}, {"imf_count", d.imf_count}};
    }
    return j.dump(indent);
}

}  // namespace wq::decompose
