#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"
#include "atcor/ingest/city_config.hpp"

namespace atcor::ingest {

struct TripRecord {
  CivilTime start_time;
  CivilTime end_time;
  std::string start_station;
  std::string end_station;
  LatLon start_coord;
  LatLon end_coord;

  bool operator==(const TripRecord&) const = default;
};

struct ParseStats {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::size_t bad_time = 0;
  std::size_t reversed_time = 0;
  std::size_t bad_coord = 0;
  std::size_t out_of_bounds = 0;
  std::size_t missing_station = 0;
  // Set when malformed / rows exceeds the city's threshold.
  bool over_threshold = false;

  double malformed_fraction() const { return rows == 0 ? 0.0 : static_cast<double>(malformed) / rows; }
  ParseStats& operator+=(const ParseStats& o);
};

struct TripParseResult {
  std::vector<TripRecord> trips;
  ParseStats stats;
};

// Throws IngestError when the file cannot be opened or lacks schema columns.
TripParseResult parse_trips(const std::filesystem::path& path, const CityConfig& city);
TripParseResult parse_trips(std::istream& in, const CityConfig& city, const std::string& source_name = "<stream>");

// Merges per-station coordinate observations: coordinates within
// `merge_radius_m` of a station's anchor share its id; a farther location
// becomes a distinct station "<id>~<k>" (relocation). Anchors are the first
// observation in chronological order. Returns the number of relocated ids.
std::size_t resolve_station_locations(std::vector<TripRecord>& trips, double merge_radius_m);

}  // namespace atcor::ingest
