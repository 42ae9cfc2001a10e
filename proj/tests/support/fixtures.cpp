#include "fixtures.hpp"

#include "wq/superstat.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fixture {

using namespace std::chrono;
using wq::data::SeriesSet;
using wq::TimeSeries;

wq::Instant t0() { return wq::parse_instant("2021-03-01T00:00:00Z"); }

std::string site_csv(const SiteCsvOptions& o) {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::ostringstream out;
    out.precision(10);
    out << "timestamp,DOO-MGL,TEMP,COND,PH,AMMONIUM,TURBIDITY\n";
    for (std::size_t i = 0; i < o.rows; ++i) {
        double t = static_cast<double>(i);
        double phase = 2.0 * std::numbers::pi * t / 48.0;
        double dox = 9.0 + 1.2 * std::sin(phase) + noise(rng);
        double temp = 14.0 + 2.0 * std::sin(phase / 2.0) + noise(rng);
        double ec = 650.0 + 40.0 * std::cos(phase) + 5.0 * noise(rng);
        if (o.ec_in_ms) ec /= 1000.0;
        double ph = 7.6 + 0.1 * std::sin(phase) + 0.1 * noise(rng);
        double amm = 0.12 + 0.02 * std::cos(phase) + 0.01 * noise(rng);
        double turb = 12.0 + 3.0 * std::sin(phase / 4.0) + noise(rng);
        out << wq::format_instant(t0() + wq::kQuarterHour * static_cast<long long>(i)) << ',' << dox << ',' << temp
            << ',' << ec << ',' << ph << ',' << amm << ',' << turb << '\n';
    }
    return out.str();
}

std::string rainfall_csv(std::size_t n_days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> rain(0.5);
    std::ostringstream out;
    out << "date,rainfall_mm\n";
    auto d0 = floor<std::chrono::days>(t0());
    for (std::size_t i = 0; i < n_days; ++i) {
        double r = rain(rng);
        out << wq::format_date(d0 + std::chrono::days{static_cast<long long>(i)}) << ',' << std::round(r * 10.0) / 10.0 << '\n';
    }
    return out.str();
}

TimeSeries multiplicative_fixture(std::uint64_t seed, std::size_t n, double eps_scale_beta) {
    wq::superstat::QGaussianParams eps{1.7, eps_scale_beta, 0.0};
    std::vector<double> draws = wq::superstat::sample_q_gaussian(eps, 2 * n, seed);
    std::vector<double> y(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = draws[k++];
        while (e <= -0.5 && k < draws.size()) e = draws[k++];
        if (e <= -0.5) e = 0.0;
        double t = static_cast<double>(i);
        double log_trend = 1.2 * std::sin(2.0 * std::numbers::pi * t / 96.0) +
                           0.6 * std::sin(2.0 * std::numbers::pi * t / (96.0 * 7.0));
        y[i] = std::exp(log_trend) * (1.0 + e);
    }
    return TimeSeries::dense("DOO-MGL", t0(), wq::kQuarterHour, y, "mg/L");
}

namespace {

SeriesSet series_set_with_do(const std::vector<double>& dox, std::uint64_t seed) {
    const std::size_t n = dox.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    SeriesSet set;
    auto put = [&](const char* name, auto f) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i));
        set[name] = TimeSeries::dense(name, t0(), wq::kQuarterHour, v, wq::data::default_unit(name));
    };
    set["DOO-MGL"] = TimeSeries::dense("DOO-MGL", t0(), wq::kQuarterHour, dox, "mg/L");
    put("TEMP", [&](double t) { return 12.0 + 3.0 * std::sin(t / 400.0) + 0.1 * noise(rng); });
    put("COND", [&](double t) { return 600.0 + 50.0 * std::cos(t / 250.0) + noise(rng); });
    put("PH", [&](double t) { return 7.5 + 0.2 * std::sin(t / 90.0) + 0.01 * noise(rng); });
    put("AMMONIUM", [&](double t) { return 0.1 + 0.05 * std::sin(t / 70.0) * std::sin(t / 70.0) + 0.001; });
    put("TURBIDITY", [&](double t) { return 10.0 + 2.0 * std::cos(t / 33.0) + 0.1 * noise(rng); });
    put("RAINFALL", [&](double t) { return std::floor(t / 96.0) * 0.1 - std::floor(t / 960.0); });
    return set;
}

}  // namespace

SeriesSet periodic_series_set(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(6.0, 11.0);
    std::vector<double> period(48);
    for (double& v : period) v = u(rng);
    std::vector<double> dox(n);
    for (std::size_t i = 0; i < n; ++i) dox[i] = period[i % 48];
    return series_set_with_do(dox, seed + 100);
}

SeriesSet random_walk_series_set(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 0.05);
    std::vector<double> dox(n);
    double v = 9.0;
    for (std::size_t i = 0; i < n; ++i) {
        v += step(rng) + 0.02 * (9.0 - v);
        dox[i] = v;
    }
    return series_set_with_do(dox, seed + 100);
}

std::shared_ptr<const wq::forecast::FeatureTable> table_of(const SeriesSet& set) {
    return std::make_shared<const wq::forecast::FeatureTable>(wq::forecast::build_feature_table(set));
}

}  // namespace fixture
