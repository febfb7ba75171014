#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"

namespace atcor::ingest {

// Column names of one trip CSV dialect.
struct TripSchema {
  std::string start_time;
  std::string end_time;
  std::string start_station;
  std::string end_station;
  std::string start_lat;
  std::string start_lon;
  std::string end_lat;
  std::string end_lon;
};

struct CityConfig {
  std::string id;
  std::string name;
  TripSchema schema;
  BoundingBox bbox;
  int interval_hours = 1;
  // POI channel map: channel k (k = 0..P-3) holds poi_categories[k].
  std::vector<std::string> poi_categories;
  // Labels not in poi_categories are counted here.
  std::string poi_fallback = "others";
  std::vector<CivilDate> holidays;
  double malformed_threshold = 0.05;
  double merge_radius_m = 50.0;
  // Consecutive empty weather intervals filled from the previous value.
  int weather_fill_limit = 3;

  std::size_t poi_channels() const { return poi_categories.size(); }
  std::size_t heatmap_channels() const { return 2 + poi_categories.size(); }
  bool is_holiday(const CivilDate& d) const;
  std::size_t poi_channel_of(const std::string& label, bool* known = nullptr) const;
};

// The three city dialects: "nyc" (Citi Bike), "chicago" (Divvy), "la" (Metro).
const std::vector<std::string>& builtin_city_ids();
CityConfig builtin_city(const std::string& id);

// JSON config file; relative "holiday_file" paths resolve against the
// config file's directory.
CityConfig load_city_config(const std::filesystem::path& path);

// Full config as JSON, holidays inline; load_city_config reads it back.
std::string city_config_json(const CityConfig& c);

// One date per line (YYYY-MM-DD); '#' starts a comment.
std::vector<CivilDate> load_holiday_file(const std::filesystem::path& path);

}  // namespace atcor::ingest
