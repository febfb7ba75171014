#include "atcor/ingest/pois.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"

namespace atcor::ingest {

PoiCatalog parse_pois(std::istream& in, const CityConfig& city, const std::string& source_name) {
  DelimitedReader reader(in);
  PoiCatalog out;
  if (reader.header().empty()) return out;
  auto c_cat = reader.column("category");
  auto c_lat = reader.column("lat");
  auto c_lon = reader.column("lon");
  if (!c_cat || !c_lat || !c_lon) throw IngestError(source_name + ": POI file needs columns category,lat,lon");
  std::set<std::string> warned;
  std::vector<std::string> row;
  std::size_t skipped = 0;
  while (reader.next(row)) {
    if (row.size() <= std::max({*c_cat, *c_lat, *c_lon})) {
      ++skipped;
      continue;
    }
    auto lat = parse_double(row[*c_lat]);
    auto lon = parse_double(row[*c_lon]);
    if (!lat || !lon || !LatLon{*lat, *lon}.finite()) {
      ++skipped;
      continue;
    }
    bool known = true;
    const std::size_t ch = city.poi_channel_of(row[*c_cat], &known);
    if (!known) {
      ++out.unknown_labels;
      if (warned.insert(row[*c_cat]).second)
        log::warn(source_name + ": unknown POI category '" + row[*c_cat] + "' counted as '" + city.poi_fallback + "'");
    }
    out.pois.push_back(Poi{ch, LatLon{*lat, *lon}});
  }
  if (skipped > 0) log::warn(source_name + ": skipped " + std::to_string(skipped) + " malformed POI rows");
  return out;
}

PoiCatalog parse_pois(const std::filesystem::path& path, const CityConfig& city) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read POI file " + path.string());
  return parse_pois(in, city, path.string());
}

}  // namespace atcor::ingest
