#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/ingest/stations.hpp"
#include "atcor/ingest/trips.hpp"

namespace atcor::ingest {

struct UsageSeries {
  std::string station;
  int interval_hours = 1;
  CivilTime t0;
  std::vector<std::int64_t> pickups;
  std::vector<std::int64_t> dropoffs;

  std::size_t size() const { return pickups.size(); }
  CivilTime interval_start(std::size_t i) const {
    return t0.plus_hours(static_cast<std::int64_t>(i) * interval_hours);
  }
};

// Number of intervals of `interval_hours` in `span`; throws SpanError when
// the span is not aligned to interval boundaries.
std::size_t interval_count(const TimeSpan& span, int interval_hours);

// pickups[t]: trips starting at `station` in interval t; dropoffs[t]: trips
// ending there. Throws Error for a station absent from `registry`.
UsageSeries bin_usage(std::span<const TripRecord> trips, const StationRegistry& registry,
                      const std::string& station, int interval_hours, const TimeSpan& span);

// Single pass over the trips for many stations.
std::map<std::string, UsageSeries> bin_usage_all(std::span<const TripRecord> trips,
                                                 std::span<const std::string> stations, int interval_hours,
                                                 const TimeSpan& span);

}  // namespace atcor::ingest
