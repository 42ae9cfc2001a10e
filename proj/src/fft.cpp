#include "wq/error.hpp"
#include "wq/forecast.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace wq::forecast {

namespace {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<double> magnitude_spectrum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientDataError("spectrum needs at least two samples");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const std::size_t bins = n / 2 + 1;

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    if (!plan) throw NumericalError("FFTW could not create a plan");
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = x[i] - mean;
    fftw_execute(plan.get());

    std::vector<double> mag(bins);
    for (std::size_t k = 0; k < bins; ++k) mag[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
    return mag;
}

std::vector<PeriodPeak> fft_dominant_periods(std::span<const double> x, std::size_t top_k) {
    auto mag = magnitude_spectrum(x);
    const std::size_t n = x.size();
    std::vector<PeriodPeak> peaks;
    for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
        if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1]) {
            double f = static_cast<double>(k) / static_cast<double>(n);
            peaks.push_back({k, f, 1.0 / f, mag[k]});
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const PeriodPeak& a, const PeriodPeak& b) { return a.magnitude > b.magnitude; });
    if (peaks.size() > top_k) peaks.resize(top_k);
    return peaks;
}

std::vector<PeriodPeak> fft_dominant_periods(const TimeSeries& series, std::size_t top_k) {
    if (!series.contiguous())
        throw PreconditionError("FFT input '" + series.indicator() +
                                "' has gaps; interpolate or split it with segment_contiguous first");
    return fft_dominant_periods(series.to_dense(), top_k);
}

}  // namespace wq::forecast
