#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"
#include "atcor/ingest/trips.hpp"

namespace atcor::ingest {

enum class StationStatus { active_existing, new_station, other };

std::string_view status_name(StationStatus s);
std::optional<StationStatus> parse_status(std::string_view s);

struct StationInfo {
  std::string id;
  LatLon coord;
  StationStatus status = StationStatus::other;
  CivilTime first_usage;
  CivilTime last_usage;
  std::size_t pickups = 0;
  std::size_t dropoffs = 0;
};

struct StationRegistry {
  std::map<std::string, StationInfo> stations;

  const StationInfo* find(const std::string& id) const;
  std::vector<std::string> ids_with(StationStatus s) const;
  std::size_t count(StationStatus s) const;
};

struct ClassifyOptions {
  // 0 disables the new-station test (existing-only classification).
  int history_days = 30;
  // Earliest instant covered by the trip data; defaults to midnight of the
  // first trip's day.
  std::optional<CivilTime> data_start;
};

// Active existing: a pick-up or drop-off on every calendar day of `window`.
// New: no usage in the `history_days` days before window.begin and at least
// one use inside the window. Anything else is "other".
// Throws SpanError when the data does not reach back far enough.
StationRegistry classify_stations(std::span<const TripRecord> trips, const TimeSpan& window,
                                  const ClassifyOptions& options = {});

// Registry of every station seen in `trips`, all marked other.
StationRegistry collect_stations(std::span<const TripRecord> trips);

}  // namespace atcor::ingest
