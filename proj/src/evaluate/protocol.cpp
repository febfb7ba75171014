#include "atcor/evaluate/protocol.hpp"

#include <cstdio>

#include "atcor/common/error.hpp"

namespace atcor::evaluate {

namespace {

std::size_t count(const TimeSpan& s, int h) {
  const std::int64_t len = static_cast<std::int64_t>(h) * kSecondsPerHour;
  return s.seconds() <= 0 ? 0 : static_cast<std::size_t>(s.seconds() / len);
}

void check_span(const char* name, const TimeSpan& s, int h) {
  const std::int64_t len = static_cast<std::int64_t>(h) * kSecondsPerHour;
  if (!(s.begin < s.end)) throw ConfigError(std::string(name) + " span is empty or inverted");
  if (s.begin.seconds % len != 0 || s.end.seconds % len != 0)
    throw ConfigError(std::string(name) + " span is not aligned to " + std::to_string(h) + " h intervals");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::size_t Protocol::train_intervals() const { return count(train, interval_hours); }
std::size_t Protocol::test_intervals() const { return count(test, interval_hours); }
std::size_t Protocol::new_window_intervals() const {
  return static_cast<std::size_t>(new_window_hours / interval_hours);
}

void Protocol::validate() const {
  if (interval_hours < 1 || 24 % interval_hours != 0) throw ConfigError("interval hours must divide 24");
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  check_span("train", train, interval_hours);
  check_span("test", test, interval_hours);
  check_span("deploy", deploy, interval_hours);
  if (test.begin < train.end) throw ConfigError("test span overlaps the training span");
  if (history_days < 0) throw ConfigError("history days must be >= 0");
  if (new_window_hours < interval_hours || new_window_hours % interval_hours != 0)
    throw ConfigError("new-station window must be a positive multiple of the interval length");
  if (first_usage_run < 1) throw ConfigError("first-usage run must be >= 1");
  if (virtual_intervals < 0 || ablation_intervals < 1) throw ConfigError("bad virtual/ablation interval counts");
}

std::map<std::string, std::string> Protocol::metadata() const {
  const auto hours = [](const TimeSpan& s) { return std::to_string(s.seconds() / kSecondsPerHour); };
  return {
      {"protocol.city", city},
      {"protocol.interval_hours", std::to_string(interval_hours)},
      {"protocol.lookback", std::to_string(lookback)},
      {"protocol.train_begin", format_civil_time(train.begin)},
      {"protocol.train_end", format_civil_time(train.end)},
      {"protocol.train_hours", hours(train)},
      {"protocol.train_intervals", std::to_string(train_intervals())},
      {"protocol.test_begin", format_civil_time(test.begin)},
      {"protocol.test_end", format_civil_time(test.end)},
      {"protocol.test_hours", hours(test)},
      {"protocol.test_intervals", std::to_string(test_intervals())},
      {"protocol.deploy_begin", format_civil_time(deploy.begin)},
      {"protocol.deploy_end", format_civil_time(deploy.end)},
      {"protocol.history_days", std::to_string(history_days)},
      {"protocol.new_window_hours", std::to_string(new_window_hours)},
      {"protocol.new_window_intervals", std::to_string(new_window_intervals())},
      {"protocol.activity_floor", num(activity_floor)},
      {"protocol.first_usage_run", std::to_string(first_usage_run)},
      {"protocol.virtual_intervals", std::to_string(virtual_intervals)},
      {"protocol.ablation_intervals", std::to_string(ablation_intervals)},
  };
}

Protocol default_protocol(const std::string& city) {
  Protocol p;
  p.city = city;
  if (city == "nyc" || city == "chicago") {
    p.interval_hours = 1;
    p.train = {make_time(2019, 4, 11), make_time(2019, 7, 20)};
    p.test = {make_time(2019, 7, 20), make_time(2019, 8, 19)};
    p.deploy = {make_time(2019, 5, 1), make_time(2019, 9, 1)};
    p.new_window_hours = 4 * 7 * 24;
    p.first_usage_run = 1;
  } else if (city == "la") {
    p.interval_hours = 4;
    p.train = {make_time(2019, 6, 1), make_time(2019, 7, 1)};
    p.test = {make_time(2019, 7, 1), make_time(2019, 7, 31)};
    p.deploy = {make_time(2019, 6, 1), make_time(2020, 1, 1)};
    p.new_window_hours = 2 * 7 * 24;
    p.first_usage_run = 2;
  } else {
    throw ConfigError("no default protocol for city '" + city + "' (known: nyc, chicago, la)");
  }
  p.validate();
  return p;
}

}  // namespace atcor::evaluate
