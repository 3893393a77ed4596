#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace circphase {

inline constexpr std::int64_t kMinutesPerDay = 1440;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` into seconds since the Unix epoch (UTC).
std::optional<std::int64_t> parse_utc_seconds(std::string_view text);

/// Formats seconds since epoch as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_utc_seconds(std::int64_t seconds);

inline std::string format_utc_minute(std::int64_t minute) { return format_utc_seconds(minute * 60); }

/// Floor division for possibly negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

/// Minute of the UTC day in [0, 1440).
constexpr std::int64_t minute_of_day(std::int64_t minute) { return floor_mod(minute, kMinutesPerDay); }

}  // namespace circphase
