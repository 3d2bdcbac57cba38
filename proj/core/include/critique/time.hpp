#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace critique {

using Duration = std::chrono::seconds;
using Timestamp = std::chrono::sys_seconds;

inline constexpr Duration kOneDay{86400};

constexpr Duration days(std::int64_t n) { return Duration{n * 86400}; }
constexpr Duration hours(std::int64_t n) { return Duration{n * 3600}; }
constexpr Duration minutes(std::int64_t n) { return Duration{n * 60}; }

class TimeFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses an ISO-8601 date or date-time and normalizes it to UTC.
/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]]` with an optional `Z` or `±HH[:MM]` suffix.
/// A space may replace the `T`. Fractional seconds are truncated.
Timestamp parse_timestamp(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_timestamp(Timestamp t);

inline double to_days(Duration d) { return static_cast<double>(d.count()) / 86400.0; }

}  // namespace critique
