#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace atcor {

// Wall-clock time in the city's local civil time, counted in seconds from
// 1970-01-01 00:00:00 as if every day had 86400 seconds. DST transitions
// therefore keep their wall-clock labels.
struct CivilTime {
  std::int64_t seconds = 0;

  auto operator<=>(const CivilTime&) const = default;

  CivilTime plus_seconds(std::int64_t s) const { return CivilTime{seconds + s}; }
  CivilTime plus_hours(std::int64_t h) const { return CivilTime{seconds + h * 3600}; }
  CivilTime plus_days(std::int64_t d) const { return CivilTime{seconds + d * 86400}; }
};

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;
  auto operator<=>(const CivilDate&) const = default;
};

std::int64_t days_from_civil(const CivilDate& date);
CivilDate civil_from_days(std::int64_t days);

CivilTime make_time(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);

// Accepts "YYYY-MM-DD HH:MM[:SS[.fff]]", "YYYY-MM-DDTHH:MM:SS", "YYYY-MM-DD"
// and "M/D/YYYY H:MM[:SS]". Fractional seconds are truncated.
std::optional<CivilTime> parse_civil_time(std::string_view text);

// "YYYY-MM-DD HH:MM:SS"
std::string format_civil_time(CivilTime t);
std::string format_date(const CivilDate& d);
std::optional<CivilDate> parse_date(std::string_view text);

// Day number since epoch (floor division).
std::int64_t day_index(CivilTime t);
CivilDate date_of(CivilTime t);
// 0 = Monday ... 6 = Sunday
int weekday(std::int64_t day);
inline bool is_weekend_day(std::int64_t day) { return weekday(day) >= 5; }

// Half-open [begin, end).
struct TimeSpan {
  CivilTime begin;
  CivilTime end;

  bool contains(CivilTime t) const { return t >= begin && t < end; }
  std::int64_t seconds() const { return end.seconds - begin.seconds; }
  auto operator<=>(const TimeSpan&) const = default;
};

// "t0..t1" with both ends in any parse_civil_time format.
std::optional<TimeSpan> parse_span(std::string_view text);

}  // namespace atcor
