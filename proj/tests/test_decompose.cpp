#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "wq/decompose.hpp"
#include "wq/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace wq::decompose;
using std::chrono::hours;
using std::chrono::minutes;
using std::chrono::seconds;

namespace {

wq::TimeSeries series_of(const std::vector<double>& v) {
    return wq::TimeSeries::dense("DOO-MGL", fixture::t0(), wq::kQuarterHour, v);
}

std::vector<double> tone(std::size_t n, double period, double amp = 1.0, double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period + phase);
    return v;
}

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> per(8.0, 400.0);
    double p1 = per(rng), p2 = per(rng), p3 = per(rng);
    std::vector<double> v(n);
    double walk = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i);
        walk += 0.05 * g(rng);
        v[i] = std::sin(2 * std::numbers::pi * t / p1) + 0.5 * std::sin(2 * std::numbers::pi * t / p2) +
               0.3 * std::cos(2 * std::numbers::pi * t / p3) + walk + 0.2 * g(rng);
    }
    return v;
}

double range_of(const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace

TEST_CASE("moving average window conventions") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    auto odd = moving_average(x, 3);
    CHECK(odd[3] == doctest::Approx(4.0));
    // Ends shrink symmetrically: index 0 has only itself.
    CHECK(odd[0] == doctest::Approx(1.0));
    CHECK(odd[6] == doctest::Approx(7.0));

    // 2x4 convention: weights 1/8, 1/4, 1/4, 1/4, 1/8.
    std::vector<double> y{0, 0, 8, 0, 0, 0, 0};
    auto even = moving_average(y, 4);
    CHECK(even[2] == doctest::Approx(2.0));
    CHECK(even[4] == doctest::Approx(1.0));
    CHECK(even[3] == doctest::Approx(2.0));

    std::vector<double> c(50, 3.25);
    for (std::size_t w : {1u, 2u, 5u, 24u, 48u}) {
        for (double v : moving_average(c, w)) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
    }
}

TEST_CASE("moving average trend windows") {
    auto s = series_of(std::vector<double>(500, 2.0));
    auto t = moving_average_trend(s, hours(6));
    for (auto v : t.values()) CHECK(*v == doctest::Approx(2.0));
    auto d = seasonal_detrend(s, hours(6), Mode::additive);
    CHECK(d.window_samples == 24);
    CHECK(d.filter_period == hours(6));
    CHECK_THROWS_AS(moving_average_trend(s, minutes(10)), wq::ParameterError);
    CHECK_THROWS_AS(moving_average_trend(s, minutes(20)), wq::ParameterError);
}

TEST_CASE("half-day moving average flattens a half-day tone") {
    auto s = series_of(tone(48 * 20, 48.0, 2.0, 0.3));
    auto t = moving_average_trend(s, hours(12)).to_dense();
    for (std::size_t i = 24; i + 24 < t.size(); ++i) CHECK(std::abs(t[i]) <= 1e-6 * 2.0);
}

TEST_CASE("seasonal detrend recovers synthetic components") {
    const std::size_t n = 2000;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<double> trend(n), eps(n), add(n), mult(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i);
        trend[i] = 8.0 + 0.001 * t;
        eps[i] = g(rng);
        add[i] = trend[i] + eps[i];
        mult[i] = trend[i] * (1.0 + eps[i]);
    }
    auto da = seasonal_detrend(series_of(add), hours(6), Mode::additive);
    auto fa = da.fluctuation.to_dense();
    CHECK(oracle::pearson(std::vector<double>(fa.begin() + 50, fa.end() - 50),
                          std::vector<double>(eps.begin() + 50, eps.end() - 50)) > 0.97);

    auto dm = seasonal_detrend(series_of(mult), hours(6), Mode::multiplicative);
    auto fm = dm.fluctuation.to_dense();
    double err = 0;
    for (std::size_t i = 50; i + 50 < n; ++i) err = std::max(err, std::abs(fm[i] - (1.0 + eps[i])));
    CHECK(err < 0.05);

    for (const auto* d : {&da, &dm}) {
        auto y = d->input.to_dense(), tr = d->trend.to_dense(), fl = d->fluctuation.to_dense();
        for (std::size_t i = 0; i < n; ++i) {
            double back = d->mode == Mode::additive ? tr[i] + fl[i] : tr[i] * fl[i];
            CHECK(std::abs(back - y[i]) <= 1e-9 * std::abs(y[i]));
        }
    }
}

TEST_CASE("multiplicative seasonal detrend rejects non-positive input") {
    std::vector<double> v(100, 1.0);
    v[37] = 0.0;
    try {
        seasonal_detrend(series_of(v), hours(1), Mode::multiplicative);
        FAIL("expected a domain error");
    } catch (const wq::DomainError& e) {
        CHECK(e.index() == 37);
    }
}

TEST_CASE("extrema and zero crossings") {
    std::vector<double> x{0, 1, 0, -1, -1, -1, 0, 2, 2, 0};
    auto e = find_extrema(x);
    CHECK(e.maxima == std::vector<std::size_t>{1, 7});
    CHECK(e.minima == std::vector<std::size_t>{4});
    CHECK(count_zero_crossings(std::vector<double>{1, -1, 1, -1}) == 3);
    CHECK(count_zero_crossings(std::vector<double>{1, 0, -1}) == 1);
}

TEST_CASE("natural spline interpolates knots and reproduces lines") {
    std::vector<double> xs{0, 3, 7, 12, 19}, ys;
    for (double x : xs) ys.push_back(2.0 - 0.5 * x);
    auto s = cubic_spline_on_grid(xs, ys, 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(s[i] == doctest::Approx(2.0 - 0.5 * static_cast<double>(i)).epsilon(1e-12));
    std::vector<double> ks{0, 4, 9}, kv{1.0, -2.0, 5.0};
    auto k = cubic_spline_on_grid(ks, kv, 10);
    CHECK(k[0] == doctest::Approx(1.0));
    CHECK(k[4] == doctest::Approx(-2.0));
    CHECK(k[9] == doctest::Approx(5.0));
}

TEST_CASE("EMD completeness and IMF criterion on random series") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        auto x = random_series(2048, seed);
        auto imfs = emd(x);
        CAPTURE(seed);
        REQUIRE_FALSE(imfs.degenerate);
        REQUIRE(imfs.imfs.size() == imfs.sift_stats.size());
        double worst = 0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            double s = imfs.residue[t];
            for (const auto& m : imfs.imfs) s += m[t];
            worst = std::max(worst, std::abs(s - x[t]));
        }
        CHECK(worst <= 1e-8 * range_of(x));
        for (std::size_t k = 0; k < imfs.imfs.size(); ++k) {
            const auto& m = imfs.imfs[k];
            auto e = find_extrema(m);
            long ext = static_cast<long>(e.maxima.size() + e.minima.size());
            long zc = static_cast<long>(count_zero_crossings(m));
            if (imfs.sift_stats[k].stop != SiftStop::max_iterations) CHECK(std::abs(ext - zc) <= 1);
        }
    }
}

TEST_CASE("EMD of a single tone") {
    auto x = tone(1000, 25.0);
    for (double& v : x) v += 3.0;
    auto imfs = emd(x);
    REQUIRE(imfs.imfs.size() >= 1);
    CHECK(oracle::pearson(imfs.imfs.back(), x) > 0.99);
    double mean_res = 0;
    for (double r : imfs.residue) mean_res += r;
    mean_res /= static_cast<double>(x.size());
    CHECK(mean_res == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("EMD separates two tones, fastest emitted last") {
    auto fast = tone(4000, 10.0), slow = tone(4000, 100.0);
    std::vector<double> x(4000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = fast[i] + slow[i];
    auto imfs = emd(x);
    REQUIRE(imfs.imfs.size() >= 2);
    CHECK(oracle::pearson(imfs.imfs.back(), fast) > 0.95);
    // The slower tone appears earlier in the slow-to-fast ordering.
    double best_slow = 0;
    for (std::size_t k = 0; k + 1 < imfs.imfs.size(); ++k) best_slow = std::max(best_slow, oracle::pearson(imfs.imfs[k], slow));
    CHECK(best_slow > 0.9);
}

TEST_CASE("EMD degenerate inputs") {
    std::vector<double> ramp(200);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.1 * static_cast<double>(i);
    auto r = emd(ramp);
    CHECK(r.imfs.empty());
    CHECK(r.degenerate);
    CHECK(r.residue == ramp);

    auto s = emd(std::vector<double>{1, 2, 1, 2, 1});
    CHECK(s.imfs.empty());
    CHECK(s.degenerate);
}

TEST_CASE("EMD configuration validation") {
    EmdConfig c;
    c.sd_threshold = 0;
    CHECK_THROWS_AS(c.validate(), wq::ParameterError);
    c = {};
    c.max_sift_iters = 0;
    CHECK_THROWS_AS(c.validate(), wq::ParameterError);
}

TEST_CASE("EMD detrend boundaries and mode shifting") {
    auto x = random_series(1500, 9);
    for (double& v : x) v += 20.0;
    auto s = series_of(x);
    auto imfs = emd(x);
    const std::size_t N = imfs.imfs.size();
    REQUIRE(N >= 3);

    auto all = emd_detrend(s, imfs, N, Mode::additive);
    for (auto v : all.trend.values()) CHECK(*v == 0.0);
    auto fl = all.fluctuation.to_dense();
    for (std::size_t t = 0; t < x.size(); ++t) CHECK(std::abs(fl[t] - x[t]) <= 1e-9 * std::abs(x[t]));

    try {
        emd_detrend(s, imfs, N + 1, Mode::additive);
        FAIL("expected parameter error");
    } catch (const wq::ParameterError& e) {
        CHECK(std::string(e.what()).find(std::to_string(N)) != std::string::npos);
    }
    CHECK_THROWS_AS(emd_detrend(s, imfs, 0, Mode::additive), wq::ParameterError);

    for (std::size_t m = 1; m < N; ++m) {
        auto a = emd_detrend(s, imfs, m, Mode::additive);
        auto b = emd_detrend(s, imfs, m + 1, Mode::additive);
        const auto& moved = imfs.imfs[N - m - 1];
        auto ta = a.trend.to_dense(), tb = b.trend.to_dense();
        auto fa = a.fluctuation.to_dense(), fb = b.fluctuation.to_dense();
        double worst = 0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            worst = std::max(worst, std::abs((ta[t] - tb[t]) - moved[t]));
            worst = std::max(worst, std::abs((fb[t] - fa[t]) - moved[t]));
        }
        CHECK(worst <= 1e-12 * range_of(x));
        CHECK(a.modes_dropped == m);
        CHECK(a.imf_count == N);
    }
}

TEST_CASE("multiplicative EMD detrend is exp of the additive log split") {
    auto y = fixture::multiplicative_fixture(2, 3000);
    auto mult = emd_detrend(y, 3, Mode::multiplicative);
    auto logs = y.to_dense();
    for (double& v : logs) v = std::log(v);
    auto add = emd_detrend(series_of(logs), 3, Mode::additive);
    auto tm = mult.trend.to_dense(), fm = mult.fluctuation.to_dense();
    auto ta = add.trend.to_dense(), fa = add.fluctuation.to_dense();
    auto yv = y.to_dense();
    for (std::size_t i = 0; i < yv.size(); ++i) {
        CHECK(tm[i] == doctest::Approx(std::exp(ta[i])).epsilon(1e-12));
        CHECK(fm[i] == doctest::Approx(std::exp(fa[i])).epsilon(1e-12));
        CHECK(std::abs(tm[i] * fm[i] - yv[i]) <= 1e-9 * yv[i]);
    }

    auto bad = y.to_dense();
    bad[5] = -2.0;
    try {
        emd_detrend(series_of(bad), 3, Mode::multiplicative);
        FAIL("expected domain error");
    } catch (const wq::DomainError& e) {
        CHECK(e.index() == 5);
    }
}

TEST_CASE("decomposition exports") {
    auto d = seasonal_detrend(series_of({1, 2, 3, 4, 5, 6}), minutes(30), Mode::additive);
    auto csv = decomposition_csv(d);
    CHECK(csv.rfind("timestamp,input,trend,fluctuation\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    auto json = decomposition_json(d);
    CHECK(json.find("\"seasonal\"") != std::string::npos);
    CHECK(json.find("\"additive\"") != std::string::npos);

    CHECK(parse_mode("multiplicative") == Mode::multiplicative);
    CHECK(parse_method("emd") == Method::emd);
    CHECK_THROWS_AS(parse_mode("ratio"), wq::ParameterError);
}
