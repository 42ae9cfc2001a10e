#include "wq/superstat.hpp"

#include "wq/error.hpp"
#include "wq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace wq::superstat {

void QGaussianParams::validate() const {
    if (!(q >= 1.0 && q < 3.0)) throw ParameterError("q-Gaussian shape q must satisfy 1 <= q < 3");
    if (!(beta > 0) || !std::isfinite(beta)) throw ParameterError("q-Gaussian scale beta must be positive");
    if (!std::isfinite(mu)) throw ParameterError("q-Gaussian shift mu must be finite");
}

double log_normalization(const QGaussianParams& p) {
    p.validate();
    if (p.q == 1.0) return 0.5 * std::log(std::numbers::pi / p.beta);
    const double qm1 = p.q - 1.0;
    return 0.5 * std::log(std::numbers::pi / (p.beta * qm1)) + std::lgamma((3.0 - p.q) / (2.0 * qm1)) -
           std::lgamma(1.0 / qm1);
}

namespace {

/// log-likelihood without re-validating parameters; caller guarantees them.
// log(1 + c d^2) without overflowing for huge |d|.
double log1p_cd2(double c, double d) {
    double z = c * d * d;
    if (std::isfinite(z)) return std::log1p(z);
    return std::log(c) + 2.0 * std::log(std::abs(d));
}

double loglik_unchecked(std::span<const double> x, double q, double beta, double mu, double log_c) {
    const double n = static_cast<double>(x.size());
    if (q == 1.0) {
        double ss = 0;
        for (double v : x) ss += (v - mu) * (v - mu);
        double ll = -n * log_c - beta * ss;
        return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
    }
    const double c = (q - 1.0) * beta;
    double acc = 0;
    for (double v : x) {
        acc += log1p_cd2(c, v - mu);
    }
    double ll = -n * log_c + acc / (1.0 - q);
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

double median_of(std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (*std::max_element(v.begin(), mid) + hi);
}

}  // namespace

double q_gaussian_log_pdf(double x, const QGaussianParams& p) {
    double log_c = log_normalization(p);
    double d = x - p.mu;
    if (p.q == 1.0) return -log_c - p.beta * d * d;
    return -log_c + log1p_cd2((p.q - 1.0) * p.beta, d) / (1.0 - p.q);
}

double q_gaussian_pdf(double x, const QGaussianParams& p) { return std::exp(q_gaussian_log_pdf(x, p)); }

double q_gaussian_loglik(std::span<const double> samples, const QGaussianParams& p) {
    if (samples.empty()) throw InsufficientDataError("log-likelihood needs at least one sample");
    return loglik_unchecked(samples, p.q, p.beta, p.mu, log_normalization(p));
}

FitResult fit_q_gaussian(std::span<const double> samples, const FitOptions& opt) {
    if (samples.size() < opt.min_samples)
        throw InsufficientDataError("q-Gaussian fit needs at least " + std::to_string(opt.min_samples) +
                                    " samples, got " + std::to_string(samples.size()));
    for (double v : samples)
        if (!std::isfinite(v)) throw DataError("q-Gaussian fit input contains non-finite samples");

    std::vector<double> tmp(samples.begin(), samples.end());
    const double mu0 = median_of(tmp);
    for (auto& v : tmp) v = std::abs(v - mu0);
    double scale = 1.4826 * median_of(tmp);
    if (!(scale > 0)) {
        double ss = 0;
        for (double v : samples) ss += (v - mu0) * (v - mu0);
        scale = std::sqrt(ss / static_cast<double>(samples.size()));
    }
    if (!(scale > 0)) throw DataError("q-Gaussian fit input has zero spread");
    const double beta0 = 1.0 / (2.0 * scale * scale);
    const double n = static_cast<double>(samples.size());

    auto objective = [&](double q, double log_beta, double mu) {
        if (!(q >= opt.q_min && q <= opt.q_max) || !std::isfinite(log_beta) || std::abs(log_beta) > 700)
            return std::numeric_limits<double>::infinity();
        QGaussianParams p{q, std::exp(log_beta), mu};
        return -loglik_unchecked(samples, q, p.beta, mu, log_normalization(p)) / n;
    };

    std::vector<GridCell> grid;
    for (int i = 0; i < opt.q_grid_count; ++i) {
        double q = std::clamp(opt.q_grid_start + opt.q_grid_step * i, opt.q_min, opt.q_max);
        for (int k = 0; k < opt.beta_grid_count; ++k) {
            double expo = opt.beta_grid_count > 1 ? -2.0 + 4.0 * k / (opt.beta_grid_count - 1) : 0.0;
            double beta = beta0 * std::pow(10.0, expo);
            double f = objective(q, std::log(beta), mu0);
            grid.push_back({{q, beta, mu0}, std::isfinite(f) ? -f * n : -std::numeric_limits<double>::infinity()});
        }
    }
    std::stable_sort(grid.begin(), grid.end(), [](const GridCell& a, const GridCell& b) { return a.loglik > b.loglik; });

    FitResult best;
    best.n_samples = samples.size();
    best.params = grid.front().params;
    best.loglik = grid.front().loglik;
    best.starts.assign(grid.begin(), grid.begin() + std::min<std::ptrdiff_t>(opt.starts, static_cast<std::ptrdiff_t>(grid.size())));

    optim::NelderMeadOptions nm;
    nm.f_tol = opt.tolerance;
    nm.max_evaluations = opt.max_evaluations;
    nm.initial_step = {0.05, 0.2, 0.1 * scale};
    for (const auto& start : best.starts) {
        auto res = optim::nelder_mead(
            [&](std::span<const double> x) { return objective(x[0], x[1], x[2]); },
            {start.params.q, std::log(start.params.beta), start.params.mu}, nm);
        best.iterations += res.iterations;
        double ll = -res.value * n;
        // Each refinement starts on a grid cell and never moves uphill in the
        // objective, so ties keep the earlier (better-ranked) start.
        if (ll > best.loglik || (&start == &best.starts.front())) {
            if (ll >= best.loglik) {
                best.params = {res.x[0], std::exp(res.x[1]), res.x[2]};
                best.loglik = ll;
            }
            best.converged = res.converged;
        }
    }
    return best;
}

void SuperstatConfig::validate() const {
    if (!(n_dof >= 1)) throw ParameterError("n_dof must be at least 1");
    if (!(beta0 > 0)) throw ParameterError("beta0 must be positive");
    if (block_len < 1) throw ParameterError("block_len must be at least 1");
}

std::vector<double> sample_superstatistical(const SuperstatConfig& config, std::size_t count) {
    config.validate();
    std::mt19937_64 gen(config.seed);
    std::chi_squared_distribution<double> chi2(config.n_dof);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
        double beta_hat = config.beta0 / config.n_dof * chi2(gen);
        double sd = 1.0 / std::sqrt(beta_hat);
        for (std::size_t i = 0; i < config.block_len && out.size() < count; ++i) out.push_back(sd * normal(gen));
    }
    return out;
}

QGaussianParams marginal_q_gaussian(double n_dof, double beta0) {
    if (!(n_dof > 0) || !(beta0 > 0)) throw ParameterError("n_dof and beta0 must be positive");
    return {1.0 + 2.0 / (n_dof + 1.0), beta0 * (n_dof + 1.0) / (2.0 * n_dof), 0.0};
}

std::vector<double> sample_q_gaussian(const QGaussianParams& p, std::size_t count, std::uint64_t seed) {
    p.validate();
    std::mt19937_64 gen(seed);
    std::vector<double> out(count);
    if (p.q == 1.0) {
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0 * p.beta));
        for (auto& v : out) v = p.mu + normal(gen);
        return out;
    }
    const double nu = (3.0 - p.q) / (p.q - 1.0);
    const double sigma = 1.0 / std::sqrt(p.beta * (3.0 - p.q));
    std::student_t_distribution<double> t(nu);
    for (auto& v : out) v = p.mu + sigma * t(gen);
    return out;
}

Histogram empirical_pdf(std::span<const double> samples, std::size_t bins, PdfScale scale,
                        std::optional<std::pair<double, double>> range) {
    if (bins < 2) throw ParameterError("empirical_pdf needs at least two bins");
    if (samples.empty()) throw DataError("empirical_pdf needs samples");
    double lo, hi;
    if (range) {
        std::tie(lo, hi) = *range;
        if (!(hi > lo)) throw ParameterError("empirical_pdf range must be increasing");
    } else {
        auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
        lo = *mn;
        hi = *mx;
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    Histogram h;
    h.counts.assign(bins, 0);
    std::size_t inside = 0;
    for (double v : samples) {
        if (!std::isfinite(v) || v < lo || v > hi) continue;
        auto idx = static_cast<std::size_t>((v - lo) / width);
        if (idx >= bins) idx = bins - 1;
        ++h.counts[idx];
        ++inside;
    }
    if (inside == 0) throw DataError("no samples fall inside the histogram range");
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges.back() = hi;
    h.centers.resize(bins);
    h.density.resize(bins);
    h.empty.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        double w = h.edges[i + 1] - h.edges[i];
        h.centers[i] = 0.5 * (h.edges[i] + h.edges[i + 1]);
        h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(inside) * w);
        h.empty[i] = scale == PdfScale::log_y && h.counts[i] == 0;
    }
    return h;
}

std::string DetrendSpec::label() const {
    return decompose::to_string(mode) + "_" + decompose::to_string(method);
}

std::vector<DetrendSpec> all_detrendings() {
    using decompose::Method;
    using decompose::Mode;
    return {{Method::seasonal, Mode::additive},
            {Method::emd, Mode::additive},
            {Method::seasonal, Mode::multiplicative},
            {Method::emd, Mode::multiplicative}};
}

std::vector<double> centered_fluctuations(const decompose::Decomposition& d) {
    auto f = d.fluctuation.to_dense();
    if (d.mode == decompose::Mode::multiplicative)
        for (auto& v : f) v -= 1.0;
    return f;
}

namespace {

struct ImfCache {
    std::optional<decompose::ImfSet> additive, log;
};

decompose::Decomposition detrend_with(const TimeSeries& series, const DetrendSpec& spec, const DetrendParams& params,
                                      ImfCache& cache) {
    if (spec.method == decompose::Method::seasonal) return decompose::seasonal_detrend(series, params.f, spec.mode);
    auto& imfs = spec.mode == decompose::Mode::additive ? cache.additive : cache.log;
    if (!imfs) {
        auto y = series.to_dense();
        if (spec.mode == decompose::Mode::multiplicative) {
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (!(y[i] > 0))
                    throw DomainError("multiplicative decomposition needs positive values; first "
                                      "offending index " + std::to_string(i), i);
                y[i] = std::log(y[i]);
            }
        }
        imfs = decompose::emd(y, params.emd);
    }
    return decompose::emd_detrend(series, *imfs, params.m, spec.mode);
}

}  // namespace

std::vector<MethodComparison> compare_detrendings(const TimeSeries& series, const std::vector<DetrendSpec>& methods,
                                                  const DetrendParams& params) {
    return compare_detrendings(std::vector<TimeSeries>{series}, methods, params);
}

std::vector<MethodComparison> compare_detrendings(const std::vector<TimeSeries>& segments,
                                                  const std::vector<DetrendSpec>& methods,
                                                  const DetrendParams& params) {
    if (segments.empty()) throw InsufficientDataError("no contiguous segment to detrend");
    std::vector<MethodComparison> out;
    std::vector<ImfCache> caches(segments.size());
    for (const auto& spec : methods) {
        MethodComparison mc{spec, std::nullopt, {}};
        try {
            std::vector<double> pooled;
            for (std::size_t k = 0; k < segments.size(); ++k) {
                auto c = centered_fluctuations(detrend_with(segments[k], spec, params, caches[k]));
                pooled.insert(pooled.end(), c.begin(), c.end());
            }
            mc.fit = fit_q_gaussian(pooled, params.fit);
        } catch (const Error& e) {
            mc.error = e.what();
        }
        out.push_back(std::move(mc));
    }
    return out;
}

SpatialTrendFit linear_trend(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw InsufficientDataError("spatial regression needs at least two sites");
    const double n = static_cast<double>(points.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0)) throw DataError("degenerate regression: all distances are equal");
    SpatialTrendFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.pearson_r = syy > 0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
    if (points.size() > 2) {
        double sse = 0;
        for (const auto& [x, y] : points) {
            double r = y - (fit.intercept + fit.slope * x);
            sse += r * r;
        }
        fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
    }
    fit.points = std::move(points);
    return fit;
}

SpatialTrendFit beta_distance_regression(const std::vector<std::pair<data::SiteMeta, FitResult>>& site_fits,
                                         SpatialParameter which) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(site_fits.size());
    for (const auto& [site, fit] : site_fits)
        pts.emplace_back(site.dist_to_sea_km, which == SpatialParameter::beta ? fit.params.beta : fit.params.q);
    return linear_trend(std::move(pts));
}

}  // namespace wq::superstat
