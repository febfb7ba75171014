#pragma once

#include <cmath>

namespace atcor {

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  bool operator==(const LatLon&) const = default;
  bool finite() const { return std::isfinite(lat) && std::isfinite(lon); }
};

struct BoundingBox {
  double min_lat = -90.0;
  double max_lat = 90.0;
  double min_lon = -180.0;
  double max_lon = 180.0;

  bool contains(const LatLon& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

inline constexpr double kEarthRadiusKm = 6371.0088;

// Great-circle distance (haversine).
double haversine_km(const LatLon& a, const LatLon& b);

// Planar offset of `p` from `origin` in meters, local equirectangular
// approximation: north along the meridian, east scaled by cos(origin lat).
struct PlanarOffset {
  double north_m = 0.0;
  double east_m = 0.0;
};

PlanarOffset equirect_offset(const LatLon& origin, const LatLon& p);
LatLon offset_position(const LatLon& origin, double north_m, double east_m);

}  // namespace atcor
