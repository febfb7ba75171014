#include "atcor/common/geo.hpp"

#include <algorithm>
#include <numbers>

namespace atcor {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMetersPerRad = kEarthRadiusKm * 1000.0;
}  // namespace

double haversine_km(const LatLon& a, const LatLon& b) {
  const double p1 = a.lat * kDegToRad;
  const double p2 = b.lat * kDegToRad;
  const double dp = (b.lat - a.lat) * kDegToRad;
  const double dl = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dp / 2.0);
  const double s2 = std::sin(dl / 2.0);
  const double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

PlanarOffset equirect_offset(const LatLon& origin, const LatLon& p) {
  const double north = (p.lat - origin.lat) * kDegToRad * kMetersPerRad;
  const double east = (p.lon - origin.lon) * kDegToRad * kMetersPerRad * std::cos(origin.lat * kDegToRad);
  return PlanarOffset{north, east};
}

LatLon offset_position(const LatLon& origin, double north_m, double east_m) {
  const double lat = origin.lat + north_m / kMetersPerRad / kDegToRad;
  const double lon = origin.lon + east_m / (kMetersPerRad * std::cos(origin.lat * kDegToRad)) / kDegToRad;
  return LatLon{lat, lon};
}

}  // namespace atcor
