#include "atcor/coldstart/coldstart.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"

namespace atcor::coldstart {

namespace {

double clamped_km(const LatLon& a, const LatLon& b) {
  const double d = haversine_km(a, b);
  if (d < kMinDistanceKm) {
    log::warn("sites " + std::to_string(d * 1000.0) + " m apart; distance clamped to 1 m");
    return kMinDistanceKm;
  }
  return d;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double similarity(const LatLon& a, const LatLon& b) { return 1.0 / clamped_km(a, b); }

NeighborWeights neighbor_weights(const std::string& target, const LatLon& coord, std::span<const ExistingSite> existing) {
  if (existing.empty()) throw Error("no existing neighbors for " + target);
  NeighborWeights w{target, coord, {}};
  double total = 0.0;
  for (const auto& e : existing) {
    Neighbor n{e.station, e.coord, clamped_km(coord, e.coord), 0.0, 0.0};
    n.sim = 1.0 / n.distance_km;
    total += n.sim * n.sim;
    w.neighbors.push_back(n);
  }
  for (auto& n : w.neighbors) n.omega = n.sim * n.sim / total;
  return w;
}

std::vector<ExistingSite> select_neighbors(const LatLon& coord, const ingest::StationRegistry& registry,
                                           const NeighborPolicy& policy, const std::string& exclude) {
  std::vector<std::pair<double, ExistingSite>> cand;
  for (const auto& [id, s] : registry.stations) {
    if (s.status != ingest::StationStatus::active_existing || id == exclude) continue;
    const double d = haversine_km(coord, s.coord);
    if (d <= policy.radius_km) cand.push_back({d, ExistingSite{id, s.coord}});
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.station < b.second.station;
  });
  std::vector<ExistingSite> out;
  for (const auto& [d, site] : cand) {
    if (static_cast<int>(out.size()) >= policy.max_neighbors) break;
    out.push_back(site);
  }
  return out;
}

TimeSpan virtual_span(CivilTime launch, int intervals, int interval_hours) {
  return TimeSpan{launch.plus_hours(-static_cast<std::int64_t>(intervals) * interval_hours), launch};
}

VirtualSeries virtual_usage(const NeighborWeights& weights, const std::map<std::string, ingest::UsageSeries>& series,
                            const TimeSpan& span, int interval_hours) {
  const std::size_t n = ingest::interval_count(span, interval_hours);
  VirtualSeries out;
  out.t0 = span.begin;
  out.interval_hours = interval_hours;
  out.weights = weights;
  out.weights.neighbors.clear();

  struct Src {
    const ingest::UsageSeries* s;
    std::size_t offset;
    Neighbor nb;
  };
  std::vector<Src> used;
  double kept = 0.0;
  for (const auto& nb : weights.neighbors) {
    auto it = series.find(nb.station);
    bool ok = it != series.end() && it->second.interval_hours == interval_hours;
    std::size_t offset = 0;
    if (ok) {
      const auto& s = it->second;
      const std::int64_t len = static_cast<std::int64_t>(interval_hours) * kSecondsPerHour;
      const std::int64_t d = span.begin.seconds - s.t0.seconds;
      ok = d >= 0 && d % len == 0 && static_cast<std::size_t>(d / len) + n <= s.size();
      if (ok) offset = static_cast<std::size_t>(d / len);
    }
    if (!ok) {
      out.dropped.push_back(nb.station);
      continue;
    }
    used.push_back(Src{&it->second, offset, nb});
    kept += nb.omega;
  }
  if (used.empty() || !(kept > 0.0))
    throw Error("no neighbor of " + weights.target + " covers " + format_civil_time(span.begin) + " .. " +
                format_civil_time(span.end));
  if (!out.dropped.empty()) {
    std::string ids;
    for (const auto& d : out.dropped) ids += " " + d;
    log::warn("virtual usage for " + weights.target + ": dropped neighbors lacking coverage:" + ids +
              "; weights renormalised");
  }
  for (auto& u : used) {
    u.nb.omega /= kept;
    out.weights.neighbors.push_back(u.nb);
  }
  out.pickups.assign(n, 0.0);
  out.dropoffs.assign(n, 0.0);
  for (const auto& u : used) {
    for (std::size_t t = 0; t < n; ++t) {
      out.pickups[t] += u.nb.omega * static_cast<double>(u.s->pickups[u.offset + t]);
      out.dropoffs[t] += u.nb.omega * static_cast<double>(u.s->dropoffs[u.offset + t]);
    }
  }
  return out;
}

void write_neighbor_weights(const std::filesystem::path& path, const NeighborWeights& w) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "target\tneighbor\tlat\tlon\tdistance_km\tsim\tomega\n";
  for (const auto& n : w.neighbors)
    out << w.target << '\t' << n.station << '\t' << num(n.coord.lat) << '\t' << num(n.coord.lon) << '\t'
        << num(n.distance_km) << '\t' << num(n.sim) << '\t' << num(n.omega) << '\n';
}

void write_virtual_series(const std::filesystem::path& path, const VirtualSeries& v) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "interval_start\tinterval_hours\tpickups\tdropoffs\n";
  for (std::size_t t = 0; t < v.pickups.size(); ++t)
    out << format_civil_time(v.t0.plus_hours(static_cast<std::int64_t>(t) * v.interval_hours)) << '\t'
        << v.interval_hours << '\t' << num(v.pickups[t]) << '\t' << num(v.dropoffs[t]) << '\n';
}

}  // namespace atcor::coldstart
