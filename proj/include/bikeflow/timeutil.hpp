#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include "bikeflow/errors.hpp"

namespace bikeflow {

// All timestamps are UTC seconds since the Unix epoch, second resolution.
using TimePoint = std::int64_t;
// Durations and times-of-day are plain seconds.
using Seconds = std::int64_t;
// A civil date as days since 1970-01-01.
using Date = std::int32_t;

constexpr Seconds kSecondsPerDay = 86400;
constexpr Seconds kDefaultStep = 120;  // the feed polls every two minutes

namespace detail {

inline std::chrono::sys_days to_sys_days(Date d) {
  return std::chrono::sys_days{std::chrono::days{d}};
}

}  // namespace detail

inline Date date_of(TimePoint t) {
  // floor division: timestamps before the epoch round toward earlier days
  std::int64_t d = t / kSecondsPerDay;
  if (t < 0 && t % kSecondsPerDay != 0) --d;
  return static_cast<Date>(d);
}

inline Seconds time_of_day(TimePoint t) {
  return t - static_cast<TimePoint>(date_of(t)) * kSecondsPerDay;
}

inline TimePoint at_midnight(Date d) {
  return static_cast<TimePoint>(d) * kSecondsPerDay;
}

inline Date make_date(int year, int month, int day) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                     std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) throw Error("invalid civil date");
  return static_cast<Date>(sys_days{ymd}.time_since_epoch().count());
}

// 0 = Monday ... 6 = Sunday.
inline int day_of_week(Date d) {
  std::chrono::weekday wd{detail::to_sys_days(d)};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

inline bool is_saturday_or_sunday(Date d) { return day_of_week(d) >= 5; }

// Parses "2008-05-15T12:00:00Z". Also accepts a space instead of 'T'.
inline TimePoint parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, dd = 0, h = 0, mi = 0, ss = 0;
  char sep = 0, z = 0;
  int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d%c", &y, &mo, &dd, &sep, &h,
                      &mi, &ss, &z);
  if (n != 8 || (sep != 'T' && sep != ' ') || z != 'Z')
    throw Error("bad ISO-8601 timestamp: '" + s + "'");
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || ss < 0 || ss > 60)
    throw Error("bad ISO-8601 timestamp: '" + s + "'");
  return at_midnight(make_date(y, mo, dd)) + h * 3600 + mi * 60 + ss;
}

inline std::string format_iso8601(TimePoint t) {
  using namespace std::chrono;
  Date d = date_of(t);
  Seconds tod = time_of_day(t);
  year_month_day ymd{detail::to_sys_days(d)};
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                static_cast<int>(tod / 3600), static_cast<int>((tod / 60) % 60),
                static_cast<int>(tod % 60));
  return buf;
}

// Parses "2008-06-24" into a Date.
inline Date parse_date(const std::string& s) {
  int y = 0, mo = 0, dd = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &mo, &dd) != 3)
    throw Error("bad date: '" + s + "'");
  return make_date(y, mo, dd);
}

inline std::string format_date(Date d) {
  using namespace std::chrono;
  year_month_day ymd{detail::to_sys_days(d)};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

// Parses "05:00" or "09:30:20" into seconds of day. "24:00" is allowed as a
// window end marker (86400).
inline Seconds parse_time_of_day(const std::string& s) {
  int h = 0, mi = 0, ss = 0;
  int n = std::sscanf(s.c_str(), "%d:%d:%d", &h, &mi, &ss);
  if (n < 2) throw Error("bad time of day: '" + s + "'");
  if (n == 2) ss = 0;
  Seconds tod = h * 3600LL + mi * 60 + ss;
  if (h < 0 || mi < 0 || mi > 59 || ss < 0 || ss > 59 || tod > kSecondsPerDay)
    throw Error("bad time of day: '" + s + "'");
  return tod;
}

inline std::string format_time_of_day(Seconds tod) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d",
                static_cast<int>(tod / 3600), static_cast<int>((tod / 60) % 60),
                static_cast<int>(tod % 60));
  return buf;
}

// A daily time window [start, end), in seconds of day. end may be 86400.
struct DailyWindow {
  Seconds start = 0;
  Seconds end = kSecondsPerDay;

  bool contains(Seconds tod) const { return tod >= start && tod < end; }
};

// Parses "05:00-24:00".
inline DailyWindow parse_daily_window(const std::string& s) {
  auto dash = s.find('-');
  if (dash == std::string::npos) throw Error("bad daily window: '" + s + "'");
  DailyWindow w;
  w.start = parse_time_of_day(s.substr(0, dash));
  w.end = parse_time_of_day(s.substr(dash + 1));
  if (w.start >= w.end) throw Error("bad daily window: '" + s + "'");
  return w;
}

}  // namespace bikeflow
