#pragma once

#include "wq/timeseries.hpp"

#include <chrono>
#include <span>
#include <string>
#include <vector>

namespace wq::decompose {

enum class Mode { additive, multiplicative };
enum class Method { seasonal, emd };

std::string to_string(Mode m);
std::string to_string(Method m);
Mode parse_mode(const std::string& s);
Method parse_method(const std::string& s);

/// Trend/fluctuation split of one contiguous series. The remainder is never
/// separated: it stays inside `fluctuation`.
///   additive:        input = trend + fluctuation
///   multiplicative:  input = trend * fluctuation
struct Decomposition {
    Mode mode = Mode::additive;
    Method method = Method::seasonal;
    TimeSeries input;
    TimeSeries trend;
    TimeSeries fluctuation;
    /// Seasonal: window length f in seconds and samples. EMD: m and N.
    std::chrono::seconds filter_period{0};
    std::size_t window_samples = 0;
    std::size_t modes_dropped = 0;
    std::size_t imf_count = 0;
};

/// Centred moving average with window w samples (odd w: plain mean; even
/// w: the 2xw convention with half weights on the outermost samples). Near
/// the ends the window shrinks symmetrically to the available samples.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);

/// moving_average over the series with window f / step. Throws
/// wq::ParameterError if f < step or f is not a whole number of steps.
TimeSeries moving_average_trend(const TimeSeries& series, std::chrono::seconds f);

Decomposition seasonal_detrend(const TimeSeries& series, std::chrono::seconds f, Mode mode);

struct EmdConfig {
    double sd_threshold = 0.2;
    int max_sift_iters = 100;
    int max_imfs = 12;
    /// Extrema mirrored at each end for envelope construction.
    int mirror_extrema = 2;

    void validate() const;
};

enum class SiftStop { sd_threshold, max_iterations, insufficient_extrema };

struct SiftStats {
    int iterations = 0;
    SiftStop stop = SiftStop::sd_threshold;
    double final_sd = 0;
};

/// Intrinsic mode functions ordered slow -> fast (IMF_1 is the slowest),
/// plus the residue, so that sum(imfs) + residue == input.
struct ImfSet {
    std::vector<std::vector<double>> imfs;
    std::vector<double> residue;
    std::vector<SiftStats> sift_stats;  // same order as imfs
    /// Set when the input had too few extrema to extract anything.
    bool degenerate = false;
};

ImfSet emd(std::span<const double> x, const EmdConfig& config = {});

/// Local extrema by sign change of the first difference; a flat run
/// contributes its midpoint. Endpoints are never extrema.
struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};
Extrema find_extrema(std::span<const double> x);
std::size_t count_zero_crossings(std::span<const double> x);

/// Trend = sum of the N-m slowest IMFs; fluctuation = the m fastest IMFs plus
/// the residue. Multiplicative mode runs the additive split on log(y) and
/// exponentiates both parts.
Decomposition emd_detrend(const TimeSeries& series, std::size_t m, Mode mode, const EmdConfig& config = {});

/// Same as emd_detrend but reuses an existing IMF set of `series` (or of
/// log(series) for multiplicative mode).
Decomposition emd_detrend(const TimeSeries& series, const ImfSet& imfs, std::size_t m, Mode mode);

/// Natural cubic spline through (xs, ys) evaluated at 0..n-1.
std::vector<double> cubic_spline_on_grid(std::span<const double> xs, std::span<const double> ys, std::size_t n);

/// CSV with columns timestamp,input,trend,fluctuation.
std::string decomposition_csv(const Decomposition& d);
/// JSON sidecar with method and parameters.
std::string decomposition_json(const Decomposition& d, int indent = 2);

}  // namespace wq::decompose
