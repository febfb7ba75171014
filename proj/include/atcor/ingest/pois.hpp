#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "atcor/common/geo.hpp"
#include "atcor/ingest/city_config.hpp"

namespace atcor::ingest {

struct Poi {
  std::size_t channel = 0;  // index into CityConfig::poi_categories
  LatLon coord;
};

struct PoiCatalog {
  std::vector<Poi> pois;
  std::size_t unknown_labels = 0;  // rows routed to the fallback channel
};

// CSV with header: category,lat,lon. Unknown labels go to the city's
// fallback channel with one warning per distinct label.
PoiCatalog parse_pois(std::istream& in, const CityConfig& city, const std::string& source_name = "<stream>");
PoiCatalog parse_pois(const std::filesystem::path& path, const CityConfig& city);

}  // namespace atcor::ingest
