#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace wadapt {

/// A UTC timestamp truncated to the hour, counted from 1970-01-01T00:00.
struct HourStamp {
  std::int64_t hours = 0;

  friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
  HourStamp operator+(std::int64_t h) const { return {hours + h}; }
  std::int64_t operator-(const HourStamp& o) const { return hours - o.hours; }
};

/// Parses `YYYY-MM-DDThh:00` (a space may replace the `T`, and a trailing
/// `:00` seconds field is accepted). Throws MalformedTimestamp, including for
/// any non-zero minute or second.
HourStamp parse_hour_stamp(std::string_view text);

std::string format_hour_stamp(HourStamp t);

}  // namespace wadapt
