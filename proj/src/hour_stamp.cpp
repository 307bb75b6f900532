#include "wadapt/hour_stamp.hpp"

#include <charconv>
#include <chrono>

#include "wadapt/error.hpp"

namespace wadapt {
namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && ptr == s.data() + pos + len;
}

[[noreturn]] void malformed(std::string_view text, const char* why) {
  throw Error(Errc::MalformedTimestamp, "'" + std::string(text) + "' " + why);
}

}  // namespace

HourStamp parse_hour_stamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDThh:mm[:ss]
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (text.size() != 16 && text.size() != 19) malformed(text, "is not YYYY-MM-DDThh:00");
  if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) || text[7] != '-' ||
      !read_int(text, 8, 2, d) || (text[10] != 'T' && text[10] != ' ') || !read_int(text, 11, 2, h) ||
      text[13] != ':' || !read_int(text, 14, 2, mi)) {
    malformed(text, "is not YYYY-MM-DDThh:00");
  }
  if (text.size() == 19 && (text[16] != ':' || !read_int(text, 17, 2, sec))) {
    malformed(text, "has a malformed seconds field");
  }
  if (mi != 0 || sec != 0) malformed(text, "is not aligned to the hour");
  if (h > 23) malformed(text, "has an hour outside 00-23");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) malformed(text, "is not a valid calendar date");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return HourStamp{static_cast<std::int64_t>(days) * 24 + h};
}

std::string format_hour_stamp(HourStamp t) {
  using namespace std::chrono;
  std::int64_t days = t.hours / 24;
  std::int64_t hour = t.hours % 24;
  if (hour < 0) {
    hour += 24;
    days -= 1;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hour));
  return buf;
}

}  // namespace wadapt
