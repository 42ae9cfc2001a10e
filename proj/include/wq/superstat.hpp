#pragma once

// q-Gaussian densities, maximum-likelihood fitting and chi-squared
// superstatistical synthesis of fluctuation spectra.

#include "wq/data.hpp"
#include "wq/decompose.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wq::superstat {

/// p(x) = [1 + (q-1) beta (x-mu)^2]^(1/(1-q)) / C_q, Gaussian exp(-beta (x-mu)^2)
/// at q = 1.
struct QGaussianParams {
    double q = 1.0;
    double beta = 1.0;
    double mu = 0.0;

    /// Throws wq::ParameterError unless 1 <= q < 3, beta > 0 and mu finite.
    void validate() const;
};

/// log C_q in closed form.
double log_normalization(const QGaussianParams& p);
double q_gaussian_log_pdf(double x, const QGaussianParams& p);
double q_gaussian_pdf(double x, const QGaussianParams& p);

/// Sum of log densities. Returns -infinity (rather than throwing) when a
/// term underflows, e.g. far-out samples at q = 1.
double q_gaussian_loglik(std::span<const double> samples, const QGaussianParams& p);

struct FitOptions {
    double q_min = 1.0001;
    double q_max = 2.999;
    /// Coarse grid q = 1.05, 1.15, ..., 2.95.
    double q_grid_start = 1.05;
    double q_grid_step = 0.1;
    int q_grid_count = 20;
    /// beta grid beta0 * 10^k for k in [-2, 2] with this many points.
    int beta_grid_count = 9;
    int starts = 3;
    double tolerance = 1e-8;  // on the per-sample log-likelihood
    int max_evaluations = 4000;
    std::size_t min_samples = 100;
};

struct GridCell {
    QGaussianParams params;
    double loglik = 0;
};

struct FitResult {
    QGaussianParams params;
    double loglik = 0;
    std::size_t n_samples = 0;
    bool converged = false;
    int iterations = 0;
    /// Best grid cells used as starting points (best first).
    std::vector<GridCell> starts;

    double loglik_per_sample() const { return n_samples ? loglik / static_cast<double>(n_samples) : 0.0; }
};

/// Maximum-likelihood q-Gaussian fit: robust initial guess (median, MAD),
/// coarse (q, beta) grid, then Nelder-Mead refinement from the best cells.
/// Deterministic for a fixed input order.
FitResult fit_q_gaussian(std::span<const double> samples, const FitOptions& options = {});

struct SuperstatConfig {
    /// Degrees of freedom n of the chi-squared law of beta-hat. Real-valued.
    double n_dof = 3;
    /// Mean of beta-hat.
    double beta0 = 1;
    std::size_t block_len = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per block of block_len samples draws beta-hat ~ (beta0/n) chi2_n and
/// then Gaussian values with inverse variance beta-hat. Reproducible for a
/// fixed seed.
std::vector<double> sample_superstatistical(const SuperstatConfig& config, std::size_t count);

/// q-Gaussian parameters of the marginal of sample_superstatistical:
/// q = 1 + 2/(n+1), beta = beta0 (n+1) / (2n), mu = 0.
QGaussianParams marginal_q_gaussian(double n_dof, double beta0);

/// Direct q-Gaussian sampler (1 < q < 3) via the Student-t representation
/// with nu = (3-q)/(q-1) and scale 1/sqrt(beta (3-q)); Gaussian at q = 1.
std::vector<double> sample_q_gaussian(const QGaussianParams& p, std::size_t count, std::uint64_t seed);

enum class PdfScale { linear, log_y };

struct Histogram {
    std::vector<double> edges;    // bins + 1
    std::vector<double> centers;  // bins
    std::vector<double> density;  // bins
    std::vector<std::size_t> counts;
    /// With log_y, bins with zero count are flagged here so a log plot can
    /// skip them.
    std::vector<bool> empty;
};

/// Equal-width histogram density over [min, max] (or `range`), normalized so
/// that sum(density * width) == 1 over the samples inside the range.
Histogram empirical_pdf(std::span<const double> samples, std::size_t bins, PdfScale scale = PdfScale::linear,
                        std::optional<std::pair<double, double>> range = std::nullopt);

struct DetrendSpec {
    decompose::Method method;
    decompose::Mode mode;
    std::string label() const;
};

/// The four seasonal/EMD x additive/multiplicative combinations.
std::vector<DetrendSpec> all_detrendings();

struct DetrendParams {
    std::chrono::seconds f{6 * 3600};
    std::size_t m = 3;
    decompose::EmdConfig emd;
    FitOptions fit;
};

struct MethodComparison {
    DetrendSpec spec;
    std::optional<FitResult> fit;
    std::string error;  // set when the method failed
};

/// Detrends with each method, centres multiplicative fluctuations as F-1,
/// fits a q-Gaussian and reports the result. A failing method records its
/// error and the others continue.
std::vector<MethodComparison> compare_detrendings(const TimeSeries& series, const std::vector<DetrendSpec>& methods,
                                                  const DetrendParams& params);
/// Same over several contiguous segments: each is detrended on its own and
/// the centred fluctuations are pooled into one fit.
std::vector<MethodComparison> compare_detrendings(const std::vector<TimeSeries>& segments,
                                                  const std::vector<DetrendSpec>& methods,
                                                  const DetrendParams& params);

/// Fluctuations ready for fitting (multiplicative ones shifted by -1).
std::vector<double> centered_fluctuations(const decompose::Decomposition& d);

enum class SpatialParameter { beta, q };

struct SpatialTrendFit {
    double slope = 0;
    double intercept = 0;
    double pearson_r = 0;
    /// Standard error of the slope (0 for two points or an exact fit).
    double slope_stderr = 0;
    std::vector<std::pair<double, double>> points;  // (dist_to_sea_km, value)
};

/// Ordinary least squares of a point set; throws wq::DataError when all x
/// are equal and wq::InsufficientDataError for fewer than two points.
SpatialTrendFit linear_trend(std::vector<std::pair<double, double>> points);

SpatialTrendFit beta_distance_regression(const std::vector<std::pair<data::SiteMeta, FitResult>>& site_fits,
                                         SpatialParameter which);

}  // namespace wq::superstat
