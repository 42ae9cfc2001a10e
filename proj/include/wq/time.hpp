#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace wq {

using Instant = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Parses ISO 8601 timestamps: "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" with an
/// optional 'T' or ' ' separator, optional fractional seconds, and an optional
/// "Z" / "+HH:MM" / "-HH:MM" suffix. Offsets are folded into UTC.
/// Throws wq::DataError on malformed input.
Instant parse_instant(std::string_view text);

/// Non-throwing variant of parse_instant.
bool try_parse_instant(std::string_view text, Instant& out);

/// "YYYY-MM-DD" only.
Date parse_date(std::string_view text);
bool try_parse_date(std::string_view text, Date& out);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_instant(Instant t);
std::string format_date(Date d);

/// Parses durations such as "900", "900s", "15min", "6h", "1d".
/// A bare number is seconds.
std::chrono::seconds parse_duration(std::string_view text);

}  // namespace wq
