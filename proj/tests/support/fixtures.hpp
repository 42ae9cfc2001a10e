#pragma once

#include "wq/data.hpp"
#include "wq/forecast.hpp"
#include "wq/timeseries.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fixture {

wq::Instant t0();

struct SiteCsvOptions {
    std::size_t rows = 96 * 14;
    std::uint64_t seed = 1;
    bool ec_in_ms = false;
};

/// Raw sonde export with the six indicator columns on a 15-min grid.
std::string site_csv(const SiteCsvOptions& options = {});

/// Daily rainfall covering `days` days from t0().
std::string rainfall_csv(std::size_t days, std::uint64_t seed = 3);

/// Positive DO-like series of length n: y = T * (1 + eps) with a log-centred
/// daily/weekly trend and q-Gaussian eps (q = 1.7), eps <= -0.5 redrawn.
wq::TimeSeries multiplicative_fixture(std::uint64_t seed, std::size_t n = 8192, double eps_scale_beta = 400.0);

/// Complete series set (six indicators + RAINFALL) whose DO is exactly
/// 48-periodic.
wq::data::SeriesSet periodic_series_set(std::size_t n, std::uint64_t seed = 5);

/// Same, with DO following a random walk.
wq::data::SeriesSet random_walk_series_set(std::size_t n, std::uint64_t seed = 6);

std::shared_ptr<const wq::forecast::FeatureTable> table_of(const wq::data::SeriesSet& set);

}  // namespace fixture
