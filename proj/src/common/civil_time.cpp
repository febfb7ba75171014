#include "atcor/common/civil_time.hpp"

#include <charconv>
#include <cstdio>

namespace atcor {

// Howard Hinnant's civil calendar algorithms (proleptic Gregorian).
std::int64_t days_from_civil(const CivilDate& date) {
  std::int64_t y = date.year;
  const unsigned m = static_cast<unsigned>(date.month);
  const unsigned d = static_cast<unsigned>(date.day);
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

CivilTime make_time(int year, int month, int day, int hour, int minute, int second) {
  const auto days = days_from_civil(CivilDate{year, month, day});
  return CivilTime{days * kSecondsPerDay + hour * kSecondsPerHour + minute * 60 + second};
}

namespace {

bool read_int(std::string_view& s, int& out, std::size_t max_digits) {
  std::size_t n = 0;
  while (n < s.size() && n < max_digits && s[n] >= '0' && s[n] <= '9') ++n;
  if (n == 0) return false;
  std::from_chars(s.data(), s.data() + n, out);
  s.remove_prefix(n);
  return true;
}

bool eat(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

bool valid_fields(int y, int mo, int d, int h, int mi, int se) {
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 ||
      se > 60)
    return false;
  // Reject dates like Feb 30 by round-tripping.
  const auto back = civil_from_days(days_from_civil(CivilDate{y, mo, d}));
  return back.year == y && back.month == mo && back.day == d;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<CivilTime> parse_civil_time(std::string_view text) {
  auto s = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (s.size() >= 10 && s[4] == '-') {
    if (!read_int(s, y, 4) || !eat(s, '-') || !read_int(s, mo, 2) || !eat(s, '-') ||
        !read_int(s, d, 2))
      return std::nullopt;
    if (s.empty()) {
      if (!valid_fields(y, mo, d, 0, 0, 0)) return std::nullopt;
      return make_time(y, mo, d);
    }
    if (!eat(s, ' ') && !eat(s, 'T')) return std::nullopt;
  } else {
    if (!read_int(s, mo, 2) || !eat(s, '/') || !read_int(s, d, 2) || !eat(s, '/') ||
        !read_int(s, y, 4))
      return std::nullopt;
    if (s.empty()) {
      if (!valid_fields(y, mo, d, 0, 0, 0)) return std::nullopt;
      return make_time(y, mo, d);
    }
    if (!eat(s, ' ')) return std::nullopt;
  }
  if (!read_int(s, h, 2) || !eat(s, ':') || !read_int(s, mi, 2)) return std::nullopt;
  if (eat(s, ':')) {
    if (!read_int(s, se, 2)) return std::nullopt;
    if (eat(s, '.')) {
      int frac = 0;
      if (!read_int(s, frac, 9)) return std::nullopt;
    }
  }
  if (!s.empty()) return std::nullopt;
  if (!valid_fields(y, mo, d, h, mi, se)) return std::nullopt;
  return make_time(y, mo, d, h, mi, se);
}

std::int64_t day_index(CivilTime t) {
  auto q = t.seconds / kSecondsPerDay;
  if (t.seconds % kSecondsPerDay < 0) --q;
  return q;
}

CivilDate date_of(CivilTime t) { return civil_from_days(day_index(t)); }

int weekday(std::int64_t day) {
  // 1970-01-01 was a Thursday (index 3).
  auto w = (day + 3) % 7;
  if (w < 0) w += 7;
  return static_cast<int>(w);
}

std::string format_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string format_civil_time(CivilTime t) {
  const auto day = day_index(t);
  const auto date = civil_from_days(day);
  const auto sod = t.seconds - day * kSecondsPerDay;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", date.year, date.month, date.day,
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60),
                static_cast<int>(sod % 60));
  return buf;
}

std::optional<CivilDate> parse_date(std::string_view text) {
  auto t = parse_civil_time(text);
  if (!t) return std::nullopt;
  return date_of(*t);
}

std::optional<TimeSpan> parse_span(std::string_view text) {
  const auto pos = text.find("..");
  if (pos == std::string_view::npos) return std::nullopt;
  auto a = parse_civil_time(text.substr(0, pos));
  auto b = parse_civil_time(text.substr(pos + 2));
  if (!a || !b || *b < *a) return std::nullopt;
  return TimeSpan{*a, *b};
}

}  // namespace atcor
