#include "atcor/ingest/city_config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "atcor/common/error.hpp"

namespace atcor::ingest {

namespace {

std::vector<CivilDate> us_federal_holidays() {
  return {
      {2019, 1, 1},  {2019, 1, 21}, {2019, 2, 18}, {2019, 5, 27},  {2019, 7, 4},
      {2019, 9, 2},  {2019, 10, 14}, {2019, 11, 11}, {2019, 11, 28}, {2019, 12, 25},
      {2020, 1, 1},  {2020, 1, 20}, {2020, 2, 17}, {2020, 5, 25},  {2020, 7, 3},
      {2020, 9, 7},  {2020, 10, 12}, {2020, 11, 11}, {2020, 11, 26}, {2020, 12, 25},
  };
}

}  // namespace

bool CityConfig::is_holiday(const CivilDate& d) const {
  return std::find(holidays.begin(), holidays.end(), d) != holidays.end();
}

std::size_t CityConfig::poi_channel_of(const std::string& label, bool* known) const {
  auto it = std::find(poi_categories.begin(), poi_categories.end(), label);
  if (it != poi_categories.end()) {
    if (known) *known = true;
    return static_cast<std::size_t>(it - poi_categories.begin());
  }
  if (known) *known = false;
  auto fb = std::find(poi_categories.begin(), poi_categories.end(), poi_fallback);
  if (fb == poi_categories.end()) throw ConfigError("POI fallback category '" + poi_fallback + "' is not a channel");
  return static_cast<std::size_t>(fb - poi_categories.begin());
}

const std::vector<std::string>& builtin_city_ids() {
  static const std::vector<std::string> ids{"nyc", "chicago", "la"};
  return ids;
}

CityConfig builtin_city(const std::string& id) {
  CityConfig c;
  c.id = id;
  c.holidays = us_federal_holidays();
  if (id == "nyc") {
    c.name = "New York City (Citi Bike)";
    c.schema = {"starttime",
                "stoptime",
                "start station id",
                "end station id",
                "start station latitude",
                "start station longitude",
                "end station latitude",
                "end station longitude"};
    c.bbox = {40.45, 41.0, -74.30, -73.65};
    c.interval_hours = 1;
    c.poi_categories = {"residential",          "education facility",  "cultural facility",
                        "recreational facility", "social services",     "transportation facility",
                        "commercial",           "government facility", "religious institution",
                        "health services",      "public safety",       "water",
                        "others"};
    c.poi_fallback = "others";
  } else if (id == "chicago") {
    c.name = "Chicago (Divvy)";
    c.schema = {"started_at", "ended_at",  "start_station_id", "end_station_id",
                "start_lat",  "start_lng", "end_lat",          "end_lng"};
    c.bbox = {41.60, 42.10, -87.95, -87.50};
    c.interval_hours = 1;
    c.poi_categories = {"sustenance", "education",  "transportation", "financial",
                        "healthcare", "entertainment, arts & culture", "others"};
    c.poi_fallback = "others";
  } else if (id == "la") {
    c.name = "Los Angeles (Metro Bike)";
    c.schema = {"start_time", "end_time",  "start_station", "end_station",
                "start_lat",  "start_lon", "end_lat",       "end_lon"};
    c.bbox = {33.70, 34.35, -118.70, -118.10};
    c.interval_hours = 4;
    c.poi_categories = {"communications",   "transportation",     "private industry",
                        "health and mental health", "social services", "postal",
                        "arts and recreation", "community groups", "municipal services",
                        "public safety",    "education",          "government",
                        "emergency response", "physical features", "environment"};
    c.poi_fallback = "physical features";
  } else {
    throw ConfigError("unknown city id '" + id + "' (expected nyc, chicago or la)");
  }
  return c;
}

std::vector<CivilDate> load_holiday_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read holiday file " + path.string());
  std::vector<CivilDate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    auto d = parse_date(line);
    if (!d) throw IngestError("bad holiday date '" + line + "' in " + path.string());
    out.push_back(*d);
  }
  return out;
}

CityConfig load_city_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read city config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  // Start from the built-in dialect of the same id when there is one.
  CityConfig c;
  const std::string id = j.value("id", "");
  const auto& ids = builtin_city_ids();
  if (std::find(ids.begin(), ids.end(), id) != ids.end()) c = builtin_city(id);
  c.id = id;
  c.name = j.value("name", c.name);
  if (j.contains("trip_schema")) {
    const auto& s = j["trip_schema"];
    c.schema.start_time = s.value("start_time", c.schema.start_time);
    c.schema.end_time = s.value("end_time", c.schema.end_time);
    c.schema.start_station = s.value("start_station", c.schema.start_station);
    c.schema.end_station = s.value("end_station", c.schema.end_station);
    c.schema.start_lat = s.value("start_lat", c.schema.start_lat);
    c.schema.start_lon = s.value("start_lon", c.schema.start_lon);
    c.schema.end_lat = s.value("end_lat", c.schema.end_lat);
    c.schema.end_lon = s.value("end_lon", c.schema.end_lon);
  }
  if (j.contains("bbox")) {
    const auto& b = j["bbox"];
    c.bbox = {b.at("min_lat").get<double>(), b.at("max_lat").get<double>(), b.at("min_lon").get<double>(),
              b.at("max_lon").get<double>()};
  }
  c.interval_hours = j.value("interval_hours", c.interval_hours);
  if (j.contains("poi_categories")) c.poi_categories = j["poi_categories"].get<std::vector<std::string>>();
  c.poi_fallback = j.value("poi_fallback", c.poi_fallback);
  c.malformed_threshold = j.value("malformed_threshold", c.malformed_threshold);
  c.merge_radius_m = j.value("merge_radius_m", c.merge_radius_m);
  c.weather_fill_limit = j.value("weather_fill_limit", c.weather_fill_limit);
  if (j.contains("holiday_file")) {
    std::filesystem::path hp = j["holiday_file"].get<std::string>();
    if (hp.is_relative()) hp = path.parent_path() / hp;
    c.holidays = load_holiday_file(hp);
  }
  if (j.contains("holidays")) {
    c.holidays.clear();
    for (const auto& h : j["holidays"]) {
      auto d = parse_date(h.get<std::string>());
      if (!d) throw ConfigError("bad holiday date in " + path.string());
      c.holidays.push_back(*d);
    }
  }
  if (c.id.empty()) throw ConfigError("city config " + path.string() + " has no id");
  if (c.interval_hours <= 0 || 24 % c.interval_hours != 0)
    throw ConfigError("interval_hours must divide 24");
  if (c.poi_categories.empty()) throw ConfigError("city config needs at least one POI category");
  return c;
}

std::string city_config_json(const CityConfig& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["name"] = c.name;
  j["trip_schema"] = {{"start_time", c.schema.start_time},       {"end_time", c.schema.end_time},
                      {"start_station", c.schema.start_station}, {"end_station", c.schema.end_station},
                      {"start_lat", c.schema.start_lat},         {"start_lon", c.schema.start_lon},
                      {"end_lat", c.schema.end_lat},             {"end_lon", c.schema.end_lon}};
  j["bbox"] = {{"min_lat", c.bbox.min_lat}, {"max_lat", c.bbox.max_lat}, {"min_lon", c.bbox.min_lon},
               {"max_lon", c.bbox.max_lon}};
  j["interval_hours"] = c.interval_hours;
  j["poi_categories"] = c.poi_categories;
  j["poi_fallback"] = c.poi_fallback;
  j["malformed_threshold"] = c.malformed_threshold;
  j["merge_radius_m"] = c.merge_radius_m;
  j["weather_fill_limit"] = c.weather_fill_limit;
  auto& h = j["holidays"] = nlohmann::json::array();
  for (const auto& d : c.holidays) h.push_back(format_date(d));
  return j.dump(2) + "\n";
}

}  // namespace atcor::ingest
