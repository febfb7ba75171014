#include "atcor/ingest/trips.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"

namespace atcor::ingest {

ParseStats& ParseStats::operator+=(const ParseStats& o) {
  rows += o.rows;
  malformed += o.malformed;
  bad_time += o.bad_time;
  reversed_time += o.reversed_time;
  bad_coord += o.bad_coord;
  out_of_bounds += o.out_of_bounds;
  missing_station += o.missing_station;
  over_threshold = over_threshold || o.over_threshold;
  return *this;
}

TripParseResult parse_trips(std::istream& in, const CityConfig& city, const std::string& source_name) {
  DelimitedReader reader(in);
  TripParseResult result;
  if (reader.header().empty()) return result;

  const auto& s = city.schema;
  const std::string* names[] = {&s.start_time, &s.end_time, &s.start_station, &s.end_station,
                                &s.start_lat,  &s.start_lon, &s.end_lat,      &s.end_lon};
  std::size_t col[8];
  for (int i = 0; i < 8; ++i) {
    auto c = reader.column(*names[i]);
    if (!c) throw IngestError(source_name + ": missing column '" + *names[i] + "' for city schema " + city.id);
    col[i] = *c;
  }
  const std::size_t need = *std::max_element(std::begin(col), std::end(col)) + 1;

  std::vector<std::string> row;
  while (reader.next(row)) {
    ++result.stats.rows;
    if (row.size() < need) {
      ++result.stats.malformed;
      ++result.stats.bad_time;
      continue;
    }
    auto t0 = parse_civil_time(row[col[0]]);
    auto t1 = parse_civil_time(row[col[1]]);
    if (!t0 || !t1) {
      ++result.stats.malformed;
      ++result.stats.bad_time;
      continue;
    }
    if (*t1 < *t0) {
      ++result.stats.malformed;
      ++result.stats.reversed_time;
      continue;
    }
    if (row[col[2]].empty() || row[col[3]].empty()) {
      ++result.stats.malformed;
      ++result.stats.missing_station;
      continue;
    }
    auto la0 = parse_double(row[col[4]]);
    auto lo0 = parse_double(row[col[5]]);
    auto la1 = parse_double(row[col[6]]);
    auto lo1 = parse_double(row[col[7]]);
    if (!la0 || !lo0 || !la1 || !lo1) {
      ++result.stats.malformed;
      ++result.stats.bad_coord;
      continue;
    }
    const LatLon a{*la0, *lo0}, b{*la1, *lo1};
    if (!a.finite() || !b.finite()) {
      ++result.stats.malformed;
      ++result.stats.bad_coord;
      continue;
    }
    if (!city.bbox.contains(a) || !city.bbox.contains(b)) {
      ++result.stats.malformed;
      ++result.stats.out_of_bounds;
      continue;
    }
    result.trips.push_back(TripRecord{*t0, *t1, row[col[2]], row[col[3]], a, b});
  }

  if (result.stats.rows > 0 && result.stats.malformed_fraction() > city.malformed_threshold) {
    result.stats.over_threshold = true;
    std::ostringstream msg;
    msg << source_name << ": " << result.stats.malformed << " of " << result.stats.rows
        << " rows malformed (threshold " << city.malformed_threshold * 100.0 << "%)";
    log::warn(msg.str());
  }
  return result;
}

TripParseResult parse_trips(const std::filesystem::path& path, const CityConfig& city) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read trip file " + path.string());
  return parse_trips(in, city, path.string());
}

std::size_t resolve_station_locations(std::vector<TripRecord>& trips, double merge_radius_m) {
  // Chronological order of endpoint observations decides the anchors.
  std::vector<std::size_t> order(trips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trips[a].start_time < trips[b].start_time; });

  struct Site {
    LatLon anchor;
    std::string id;
  };
  std::map<std::string, std::vector<Site>> sites;
  std::size_t relocated = 0;

  auto resolve = [&](std::string& id, LatLon& coord) {
    auto& list = sites[id];
    for (const auto& site : list) {
      if (haversine_km(site.anchor, coord) * 1000.0 <= merge_radius_m) {
        coord = site.anchor;
        id = site.id;
        return;
      }
    }
    std::string new_id = list.empty() ? id : id + "~" + std::to_string(list.size());
    if (!list.empty()) ++relocated;
    list.push_back(Site{coord, new_id});
    id = new_id;
  };

  for (std::size_t i : order) {
    auto& t = trips[i];
    resolve(t.start_station, t.start_coord);
    resolve(t.end_station, t.end_coord);
  }
  return relocated;
}

}  // namespace atcor::ingest
