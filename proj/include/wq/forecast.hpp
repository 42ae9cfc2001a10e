#pragma once

// Forecasting protocol: chronological splits, train-only normalization,
// fourteen-covariate features, FFT periodicity detection, sliding windows,
// baseline forecasters and MAE/SMAPE evaluation.

#include "wq/data.hpp"
#include "wq/timeseries.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wq::forecast {

inline constexpr std::size_t kCovariates = 14;
/// Samples per half-day on the 15-minute grid.
inline constexpr std::size_t kHalfDay = 48;

enum Covariate : std::size_t {
    kDissolvedOxygen = 0,
    kTemperature,
    kConductivity,
    kPH,
    kAmmonium,
    kTurbidity,
    kRainfall,
    kHourOfDay,
    kDayOfWeek,
    kMonthOfYear,
    kHalfDaySin,
    kHalfDayCos,
    kYearSin,
    kYearCos,
};

const std::array<std::string_view, kCovariates>& covariate_names();

using CovariateVector = std::array<double, kCovariates>;

struct IndicatorValues {
    double dissolved_oxygen = 0;
    double temperature = 0;
    double conductivity = 0;
    double ph = 0;
    double ammonium = 0;
    double turbidity = 0;
    double rainfall = 0;
};

/// Seven measurements followed by calendar encodings: hour, weekday
/// (Monday = 0) and month scaled into [-0.5, 0.5), then sin/cos of the
/// half-day phase and of the year phase (365.2425-day year).
CovariateVector build_covariates(Instant t, const IndicatorValues& v);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WindowView = Eigen::Block<const RowMatrix>;

/// Covariate rows on a regular grid. Rows missing any measurement are
/// marked invalid; their values are zero and never read.
struct FeatureTable {
    std::vector<Instant> time;
    RowMatrix values;  // rows x kCovariates
    std::vector<bool> valid;

    std::size_t rows() const noexcept { return time.size(); }
    std::size_t valid_count() const;
    FeatureTable slice(std::size_t begin, std::size_t end) const;
};

/// Needs the six sonde indicators and RAINFALL on one shared grid.
FeatureTable build_feature_table(const data::SeriesSet& set);

struct SplitSpec {
    double train = 0.7;
    double val = 0.2;
    double test = 0.1;

    void validate() const;
    static SplitSpec forecasting() { return {0.7, 0.2, 0.1}; }
    static SplitSpec regression() { return {0.8, 0.0, 0.2}; }
};

/// Boundary indices floor(n * cumulative fraction): [0, a) train,
/// [a, b) val, [b, n) test.
std::pair<std::size_t, std::size_t> split_points(std::size_t n, const SplitSpec& spec);

struct Splits {
    FeatureTable train, val, test;
};

/// Throws wq::InsufficientDataError naming the block when a block with a
/// non-zero fraction is shorter than `min_block` rows.
Splits chronological_split(const FeatureTable& table, const SplitSpec& spec, std::size_t min_block = 0);

struct NormStats {
    std::array<double, kCovariates> mean{};
    std::array<double, kCovariates> stddev{};
    /// Constant covariates pass through unscaled.
    std::array<bool, kCovariates> constant{};

    double denormalize(std::size_t column, double v) const;
    double normalize(std::size_t column, double v) const;
};

/// Population mean/std over the valid rows of the training block.
NormStats compute_norm_stats(const FeatureTable& train);
FeatureTable zscore(const FeatureTable& table, const NormStats& stats);
FeatureTable inverse_zscore(const FeatureTable& table, const NormStats& stats);

struct PeriodPeak {
    std::size_t bin = 0;
    double frequency = 0;  // cycles per sample
    double period = 0;     // samples
    double magnitude = 0;
};

/// |DFT| of the mean-removed signal for bins 0..n/2.
std::vector<double> magnitude_spectrum(std::span<const double> x);

/// Local maxima of the magnitude spectrum (excluding DC and Nyquist)
/// ranked by magnitude; the top_k are returned.
std::vector<PeriodPeak> fft_dominant_periods(std::span<const double> x, std::size_t top_k);
/// Throws wq::PreconditionError if the series has gaps.
std::vector<PeriodPeak> fft_dominant_periods(const TimeSeries& series, std::size_t top_k);

/// Stride-1 windows over the contiguous runs of valid rows of a table.
class WindowSet {
public:
    WindowSet(std::shared_ptr<const FeatureTable> table, std::size_t input_len, std::size_t horizon,
              std::size_t batch_size, std::uint64_t seed);

    std::size_t size() const noexcept { return starts_.size(); }
    std::size_t input_len() const noexcept { return input_len_; }
    std::size_t horizon() const noexcept { return horizon_; }
    std::size_t batch_size() const noexcept { return batch_size_; }
    const FeatureTable& table() const noexcept { return *table_; }

    /// input_len x kCovariates block of window i (in chronological order).
    WindowView input(std::size_t i) const;
    /// Next `horizon` DO values after window i.
    std::vector<double> target(std::size_t i) const;
    Instant input_end(std::size_t i) const;
    Instant target_time(std::size_t i, std::size_t step) const;
    std::size_t start_row(std::size_t i) const { return starts_[i]; }

    /// Window indices shuffled by the seed and cut into batches.
    const std::vector<std::vector<std::size_t>>& batches() const noexcept { return batches_; }
    std::size_t skipped_segments() const noexcept { return skipped_; }
    /// True when (input_len, horizon) lies on the evaluation grid
    /// {48, 96, 192} x {1, 12, 24, 48}.
    bool on_paper_grid() const noexcept { return paper_grid_; }

private:
    std::shared_ptr<const FeatureTable> table_;
    std::size_t input_len_, horizon_, batch_size_;
    std::vector<std::size_t> starts_;
    std::vector<std::vector<std::size_t>> batches_;
    std::size_t skipped_ = 0;
    bool paper_grid_ = false;
};

WindowSet make_windows(std::shared_ptr<const FeatureTable> table, std::size_t input_len, std::size_t horizon,
                       std::size_t batch_size = 32, std::uint64_t seed = 0);

/// Last DO input repeated `horizon` times.
std::vector<double> forecast_last(const WindowView& window, std::size_t horizon);
/// DO inputs at [L-48, L-48+horizon), cycling through the last half-day
/// when horizon > 48. Throws wq::PreconditionError for L < 48.
std::vector<double> forecast_repeat(const WindowView& window, std::size_t horizon);

class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string name() const = 0;
    virtual void fit(const WindowSet& /*train*/) {}
    /// Normalized DO predictions for window i.
    virtual std::vector<double> predict(const WindowSet& windows, std::size_t i) const = 0;
    virtual bool stochastic() const { return false; }
};

class LastForecaster final : public Forecaster {
public:
    std::string name() const override { return "Last"; }
    std::vector<double> predict(const WindowSet& w, std::size_t i) const override;
};

class RepeatForecaster final : public Forecaster {
public:
    std::string name() const override { return "Repeat"; }
    std::vector<double> predict(const WindowSet& w, std::size_t i) const override;
};

/// Least-squares map from the last input step's covariates (+ bias) to
/// the horizon outputs.
struct LinearProjection {
    Eigen::MatrixXd weights;  // (kCovariates + 1) x horizon, bias last

    std::vector<double> predict(const WindowView& window) const;
};

/// Ridge-regularized normal equations (X'X + ridge I) W = X'Y. Throws
/// wq::InsufficientDataError below 15 windows and wq::NumericalError when
/// the system is still singular.
LinearProjection fit_linear_projection(const WindowSet& train, double ridge = 1e-6);

class LinearForecaster final : public Forecaster {
public:
    explicit LinearForecaster(double ridge = 1e-6) : ridge_(ridge) {}
    std::string name() const override { return "Linear"; }
    void fit(const WindowSet& train) override;
    std::vector<double> predict(const WindowSet& w, std::size_t i) const override;

private:
    double ridge_;
    LinearProjection model_;
};

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>()>;
/// "last", "repeat", "linear" (case-insensitive).
ForecasterFactory baseline_factory(const std::string& name);

double mae(std::span<const double> y, std::span<const double> yhat);
/// 100 * mean |y - yhat| / (|y| + |yhat|); 0/0 terms count as 0.
double smape(std::span<const double> y, std::span<const double> yhat);

struct SameTimeRegression {
    Eigen::VectorXd coef;  // 13 non-DO covariates then bias
    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// OLS (with ridge) of same-time DO on the 13 other covariates.
SameTimeRegression fit_same_time_linreg(const FeatureTable& train, double ridge = 1e-6);

struct RegressionEvaluation {
    /// Fitted on z-scored covariates; `stats` maps back to physical units.
    SameTimeRegression model;
    NormStats stats;
    double smape = 0;
    double mae = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

/// 80/20 chronological split, z-score with train statistics, fit on train,
/// SMAPE (%) and MAE on test in physical units.
RegressionEvaluation evaluate_same_time(const FeatureTable& table, const SplitSpec& spec = SplitSpec::regression());

struct GridSpec {
    std::vector<std::size_t> input_lens{48, 96, 192};
    std::vector<std::size_t> horizons{1, 12, 24, 48};
    std::size_t repetitions = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct CellMetrics {
    double mae = 0;    // mg/L
    double smape = 0;  // %
    double mae_normalized = 0;
    double smape_normalized = 0;
    std::size_t windows = 0;
    std::size_t repetitions = 0;
    std::string error;
};

struct MetricsTable {
    std::vector<std::string> models;
    /// (input_len, horizon) -> model -> metrics
    std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, CellMetrics>> cells;

    /// Rows "<input>_<horizon>", columns "<model>_MAE,<model>_SMAPE".
    std::string to_csv() const;
    std::string to_json(int indent = 2) const;
};

struct EvaluationData {
    std::shared_ptr<const FeatureTable> train;  // normalized
    std::shared_ptr<const FeatureTable> test;   // normalized
    NormStats stats;
};

/// Fits every model on the train windows of each grid cell and scores it
/// on the test windows. Deterministic models are scored once; stochastic
/// ones are averaged over `repetitions`. Model failures are recorded per
/// cell.
MetricsTable evaluate(const std::vector<ForecasterFactory>& models, const EvaluationData& data, const GridSpec& grid);

/// Non-overlapping forecast traces (windows with stride = horizon) as CSV
/// rows timestamp,y,yhat,model,input_len,horizon in physical units. The
/// header line is optional so dumps of several models can be concatenated.
std::string prediction_dump_csv(const Forecaster& model, const WindowSet& test, const NormStats& stats,
                                bool header = true);

}  // namespace wq::forecast
