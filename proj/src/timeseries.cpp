#include "wq/timeseries.hpp"

#include "wq/error.hpp"

#include <algorithm>
#include <cmath>

namespace wq {

TimeSeries::TimeSeries(std::string indicator, Instant start, std::chrono::seconds step,
                       std::vector<std::optional<double>> values, std::string unit)
    : indicator_(std::move(indicator)), unit_(std::move(unit)), start_(start), step_(step),
      values_(std::move(values)) {
    if (step_.count() <= 0) throw ParameterError("time series step must be positive");
    if (values_.empty()) throw ParameterError("time series '" + indicator_ + "' has no samples");
    for (const auto& v : values_)
        if (v && !std::isfinite(*v))
            throw DataError("non-finite value stored in series '" + indicator_ + "'");
}

TimeSeries TimeSeries::dense(std::string indicator, Instant start, std::chrono::seconds step,
                             std::span<const double> values, std::string unit) {
    std::vector<std::optional<double>> v(values.begin(), values.end());
    return TimeSeries(std::move(indicator), start, step, std::move(v), std::move(unit));
}

void TimeSeries::set(std::size_t i, std::optional<double> v) {
    if (v && !std::isfinite(*v)) throw DataError("non-finite value stored in series '" + indicator_ + "'");
    values_.at(i) = v;
}

std::size_t TimeSeries::present_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); }));
}

std::vector<double> TimeSeries::to_dense() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!values_[i])
            throw PreconditionError("series '" + indicator_ + "' has a gap at index " + std::to_string(i) +
                                    "; split it with segment_contiguous first");
        out.push_back(*values_[i]);
    }
    return out;
}

}  // namespace wq
