#include "atcor/ingest/stations.hpp"

#include <algorithm>
#include <set>

#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"

namespace atcor::ingest {

std::string_view status_name(StationStatus s) {
  switch (s) {
    case StationStatus::active_existing:
      return "active_existing";
    case StationStatus::new_station:
      return "new";
    case StationStatus::other:
      break;
  }
  return "other";
}

std::optional<StationStatus> parse_status(std::string_view s) {
  if (s == "active_existing") return StationStatus::active_existing;
  if (s == "new") return StationStatus::new_station;
  if (s == "other") return StationStatus::other;
  return std::nullopt;
}

const StationInfo* StationRegistry::find(const std::string& id) const {
  auto it = stations.find(id);
  return it == stations.end() ? nullptr : &it->second;
}

std::vector<std::string> StationRegistry::ids_with(StationStatus s) const {
  std::vector<std::string> out;
  for (const auto& [id, info] : stations)
    if (info.status == s) out.push_back(id);
  return out;
}

std::size_t StationRegistry::count(StationStatus s) const {
  return static_cast<std::size_t>(std::count_if(stations.begin(), stations.end(),
                                                [s](const auto& kv) { return kv.second.status == s; }));
}

namespace {

// Coordinates come from the chronologically first observation, ties broken
// by position, so the registry does not depend on trip order.
void note_use(StationInfo& info, CivilTime t, const LatLon& coord, bool pickup) {
  const bool first = info.pickups + info.dropoffs == 0;
  if (first || t < info.first_usage ||
      (t == info.first_usage &&
       (coord.lat < info.coord.lat || (coord.lat == info.coord.lat && coord.lon < info.coord.lon)))) {
    info.coord = coord;
  }
  info.first_usage = first ? t : std::min(info.first_usage, t);
  info.last_usage = first ? t : std::max(info.last_usage, t);
  if (pickup)
    ++info.pickups;
  else
    ++info.dropoffs;
}

}  // namespace

StationRegistry collect_stations(std::span<const TripRecord> trips) {
  StationRegistry reg;
  for (const auto& t : trips) {
    auto& a = reg.stations[t.start_station];
    a.id = t.start_station;
    note_use(a, t.start_time, t.start_coord, true);
    auto& b = reg.stations[t.end_station];
    b.id = t.end_station;
    note_use(b, t.end_time, t.end_coord, false);
  }
  return reg;
}

StationRegistry classify_stations(std::span<const TripRecord> trips, const TimeSpan& window,
                                  const ClassifyOptions& options) {
  CivilTime data_start;
  if (options.data_start) {
    data_start = *options.data_start;
  } else if (!trips.empty()) {
    CivilTime first = trips.front().start_time;
    for (const auto& t : trips) first = std::min(first, t.start_time);
    data_start = CivilTime{day_index(first) * kSecondsPerDay};
  } else {
    data_start = window.begin;
  }
  const CivilTime history_begin = window.begin.plus_days(-options.history_days);
  if (history_begin < data_start) {
    throw SpanError("classification window starting " + format_civil_time(window.begin) + " requires " +
                    std::to_string(options.history_days) + " days of trip history from " +
                    format_civil_time(history_begin) + ", but data starts at " + format_civil_time(data_start));
  }

  StationRegistry reg = collect_stations(trips);
  const auto first_day = day_index(window.begin);
  const auto last_day = day_index(window.end.plus_seconds(-1));

  std::map<std::string, std::set<std::int64_t>> days_used;
  std::map<std::string, bool> used_in_history;
  auto mark = [&](const std::string& id, CivilTime t) {
    if (window.contains(t)) days_used[id].insert(day_index(t));
    if (t >= history_begin && t < window.begin) used_in_history[id] = true;
  };
  for (const auto& t : trips) {
    mark(t.start_station, t.start_time);
    mark(t.end_station, t.end_time);
  }

  const std::size_t window_days = static_cast<std::size_t>(last_day - first_day + 1);
  for (auto& [id, info] : reg.stations) {
    const auto it = days_used.find(id);
    const std::size_t covered = it == days_used.end() ? 0 : it->second.size();
    // A station with no prior history is new even if it was used daily
    // since its launch.
    if (options.history_days > 0 && covered > 0 && !used_in_history[id]) {
      info.status = StationStatus::new_station;
    } else if (covered == window_days) {
      info.status = StationStatus::active_existing;
    } else {
      info.status = StationStatus::other;
    }
  }
  log::info("classified " + std::to_string(reg.stations.size()) + " stations: " +
            std::to_string(reg.count(StationStatus::active_existing)) + " active existing, " +
            std::to_string(reg.count(StationStatus::new_station)) + " new, " +
            std::to_string(reg.count(StationStatus::other)) + " other");
  return reg;
}

}  // namespace atcor::ingest
