#include "atcor/ingest/usage.hpp"

#include <unordered_map>

#include "atcor/common/error.hpp"

namespace atcor::ingest {

std::size_t interval_count(const TimeSpan& span, int interval_hours) {
  if (interval_hours <= 0) throw ConfigError("interval length must be positive");
  const std::int64_t len = interval_hours * kSecondsPerHour;
  if (span.begin.seconds % len != 0 || span.seconds() % len != 0 || span.seconds() < 0) {
    throw SpanError("span " + format_civil_time(span.begin) + " .. " + format_civil_time(span.end) +
                    " is not aligned to " + std::to_string(interval_hours) + "h intervals");
  }
  return static_cast<std::size_t>(span.seconds() / len);
}

namespace {

std::int64_t slot_of(CivilTime t, const TimeSpan& span, std::int64_t len) {
  return (t.seconds - span.begin.seconds) / len;
}

}  // namespace

std::map<std::string, UsageSeries> bin_usage_all(std::span<const TripRecord> trips,
                                                 std::span<const std::string> stations, int interval_hours,
                                                 const TimeSpan& span) {
  const std::size_t n = interval_count(span, interval_hours);
  const std::int64_t len = interval_hours * kSecondsPerHour;
  std::map<std::string, UsageSeries> out;
  std::unordered_map<std::string, UsageSeries*> lookup;
  for (const auto& id : stations) {
    auto& s = out[id];
    s.station = id;
    s.interval_hours = interval_hours;
    s.t0 = span.begin;
    s.pickups.assign(n, 0);
    s.dropoffs.assign(n, 0);
    lookup[id] = &s;
  }
  for (const auto& t : trips) {
    if (span.contains(t.start_time)) {
      if (auto it = lookup.find(t.start_station); it != lookup.end())
        ++it->second->pickups[static_cast<std::size_t>(slot_of(t.start_time, span, len))];
    }
    if (span.contains(t.end_time)) {
      if (auto it = lookup.find(t.end_station); it != lookup.end())
        ++it->second->dropoffs[static_cast<std::size_t>(slot_of(t.end_time, span, len))];
    }
  }
  return out;
}

UsageSeries bin_usage(std::span<const TripRecord> trips, const StationRegistry& registry,
                      const std::string& station, int interval_hours, const TimeSpan& span) {
  if (!registry.find(station)) throw Error("unknown station id '" + station + "'");
  const std::string ids[] = {station};
  auto all = bin_usage_all(trips, ids, interval_hours, span);
  return std::move(all.begin()->second);
}

}  // namespace atcor::ingest
