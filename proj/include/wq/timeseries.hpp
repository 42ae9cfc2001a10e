#pragma once

#include "wq/time.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wq {

inline constexpr std::chrono::seconds kQuarterHour{900};

/// Regularly sampled values of one indicator. Missing samples are
/// std::nullopt; a stored value is always finite.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::string indicator, Instant start, std::chrono::seconds step,
               std::vector<std::optional<double>> values, std::string unit = {});

    /// Builds a gap-free series from dense values.
    static TimeSeries dense(std::string indicator, Instant start, std::chrono::seconds step,
                            std::span<const double> values, std::string unit = {});

    const std::string& indicator() const noexcept { return indicator_; }
    const std::string& unit() const noexcept { return unit_; }
    Instant start() const noexcept { return start_; }
    std::chrono::seconds step() const noexcept { return step_; }
    std::size_t size() const noexcept { return values_.size(); }
    Instant time_at(std::size_t i) const { return start_ + step_ * static_cast<long long>(i); }
    Instant end() const { return time_at(size()); }

    const std::vector<std::optional<double>>& values() const noexcept { return values_; }
    const std::optional<double>& operator[](std::size_t i) const { return values_[i]; }

    void set(std::size_t i, std::optional<double> v);
    void set_unit(std::string unit) { unit_ = std::move(unit); }
    void set_indicator(std::string name) { indicator_ = std::move(name); }

    std::size_t present_count() const noexcept;
    std::size_t missing_count() const noexcept { return size() - present_count(); }
    bool contiguous() const noexcept { return missing_count() == 0; }

    /// Values as plain doubles. Throws wq::PreconditionError if any sample is
    /// missing.
    std::vector<double> to_dense() const;

private:
    std::string indicator_;
    std::string unit_;
    Instant start_{};
    std::chrono::seconds step_{kQuarterHour};
    std::vector<std::optional<double>> values_;
};

}  // namespace wq
