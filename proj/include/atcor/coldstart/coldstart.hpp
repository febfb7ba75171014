#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"
#include "atcor/ingest/stations.hpp"
#include "atcor/ingest/usage.hpp"

namespace atcor::coldstart {

inline constexpr double kMinDistanceKm = 0.001;

// 1 / great-circle km, with the distance clamped to 1 m (logged).
double similarity(const LatLon& a, const LatLon& b);

struct Neighbor {
  std::string station;
  LatLon coord;
  double distance_km = 0.0;  // clamped
  double sim = 0.0;
  double omega = 0.0;
};

struct NeighborWeights {
  std::string target;  // new station id or "candidate"
  LatLon coord;
  std::vector<Neighbor> neighbors;
};

struct ExistingSite {
  std::string station;
  LatLon coord;
};

// omega_f = Sim_f^2 / sum Sim^2 over `existing`. Throws Error when empty.
NeighborWeights neighbor_weights(const std::string& target, const LatLon& coord, std::span<const ExistingSite> existing);

struct NeighborPolicy {
  int max_neighbors = 8;
  double radius_km = 5.0;
};

// Active existing stations within radius, nearest first (ties by id), at
// most max_neighbors; `exclude` is skipped.
std::vector<ExistingSite> select_neighbors(const LatLon& coord, const ingest::StationRegistry& registry,
                                           const NeighborPolicy& policy, const std::string& exclude = {});

struct VirtualSeries {
  CivilTime t0;
  int interval_hours = 1;
  std::vector<double> pickups;
  std::vector<double> dropoffs;
  NeighborWeights weights;            // after any renormalisation
  std::vector<std::string> dropped;   // neighbors without full coverage
};

// [launch - intervals * h, launch)
TimeSpan virtual_span(CivilTime launch, int intervals, int interval_hours);

// L_n = sum_f omega_f L_f per interval, pick-ups and drop-offs separately.
// Neighbors whose series do not cover the span are dropped and the
// remaining weights renormalised (warning); throws Error when none remain.
VirtualSeries virtual_usage(const NeighborWeights& weights, const std::map<std::string, ingest::UsageSeries>& series,
                            const TimeSpan& span, int interval_hours);

void write_neighbor_weights(const std::filesystem::path& path, const NeighborWeights& w);
void write_virtual_series(const std::filesystem::path& path, const VirtualSeries& v);

}  // namespace atcor::coldstart
