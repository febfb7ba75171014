#include "atcor/cluster/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/common/rng.hpp"

namespace atcor::cluster {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest(const std::vector<std::vector<double>>& centroids, const std::vector<double>& x, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = sq_dist(centroids[j], x);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

double objective(std::span<const StationSignature> sigs, const std::vector<int>& label,
                 const std::vector<std::vector<double>>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < sigs.size(); ++i) s += sq_dist(sigs[i].vector, centroids[static_cast<std::size_t>(label[i])]);
  return s;
}

std::vector<std::vector<double>> seed_plus_plus(std::span<const StationSignature> sigs, int k, Rng& rng) {
  const std::size_t n = sigs.size();
  std::vector<std::vector<double>> centroids;
  centroids.push_back(sigs[rng.index(n)].vector);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(sigs[i].vector, centroids[0]);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (r < d2[i]) {
          pick = i;
          break;
        }
        r -= d2[i];
      }
    } else {
      pick = rng.index(n);
    }
    centroids.push_back(sigs[pick].vector);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(sigs[i].vector, centroids.back()));
  }
  return centroids;
}

}  // namespace

StationSignature signature(const std::string& station, std::span<const grid::Heatmap> heatmaps) {
  if (heatmaps.empty()) throw Error("signature of " + station + ": empty heatmap sequence");
  const auto& first = heatmaps.front();
  const auto p = static_cast<std::size_t>(first.channels);
  std::vector<double> mean(first.values.size(), 0.0);
  for (const auto& h : heatmaps) {
    if (h.rows != first.rows || h.cols != first.cols || h.channels != first.channels)
      throw ShapeError("signature of " + station + ": heatmaps differ in shape");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += h.values[i];
  }
  const double n = static_cast<double>(heatmaps.size());
  StationSignature sig{station, std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < mean.size(); ++i) sig.vector[i % p] += mean[i] / n;
  return sig;
}

double pairwise_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("signature lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<std::string> ClusterAssignment::members(int cluster) const {
  std::vector<std::string> out;
  for (const auto& [id, c] : station_cluster)
    if (c == cluster) out.push_back(id);
  return out;
}

KMeansResult kmeans(std::span<const StationSignature> sigs, int k, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = sigs.size();
  if (k < 1) throw ConfigError("k-means needs K >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw ConfigError("k-means K = " + std::to_string(k) + " exceeds station count " + std::to_string(n));
  const std::size_t dim = sigs.front().vector.size();
  for (const auto& s : sigs)
    if (s.vector.size() != dim) throw ShapeError("signature lengths differ for " + s.station);

  Rng rng(seed);
  KMeansResult res;
  auto centroids = seed_plus_plus(sigs, k, rng);
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = nearest(centroids, sigs[i].vector, nullptr);
  res.wcss_trace.push_back(objective(sigs, label, centroids));

  for (int it = 0; it < options.max_iterations; ++it) {
    // update step
    std::vector<std::vector<double>> next(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = next[static_cast<std::size_t>(label[i])];
      for (std::size_t d = 0; d < dim; ++d) c[d] += sigs[i].vector[d];
      ++count[static_cast<std::size_t>(label[i])];
    }
    for (int j = 0; j < k; ++j) {
      auto& c = next[static_cast<std::size_t>(j)];
      if (count[static_cast<std::size_t>(j)] > 0) {
        for (double& v : c) v /= static_cast<double>(count[static_cast<std::size_t>(j)]);
      } else {
        c = centroids[static_cast<std::size_t>(j)];
      }
    }
    // empty clusters take the farthest point of a multi-point cluster
    for (int j = 0; j < k; ++j) {
      if (count[static_cast<std::size_t>(j)] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[static_cast<std::size_t>(label[i])] < 2) continue;
        const double d = sq_dist(sigs[i].vector, next[static_cast<std::size_t>(label[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) continue;
      --count[static_cast<std::size_t>(label[far])];
      label[far] = j;
      count[static_cast<std::size_t>(j)] = 1;
      next[static_cast<std::size_t>(j)] = sigs[far].vector;
      // donor centroid is refreshed on the next update step
    }
    double shift = 0.0;
    for (int j = 0; j < k; ++j)
      shift = std::max(shift, std::sqrt(sq_dist(next[static_cast<std::size_t>(j)], centroids[static_cast<std::size_t>(j)])));
    centroids = std::move(next);
    // assignment step
    for (std::size_t i = 0; i < n; ++i) {
      double d_best = 0.0;
      const int j = nearest(centroids, sigs[i].vector, &d_best);
      // keep the current label when it is already optimal so a reseeded point stays put
      if (sq_dist(sigs[i].vector, centroids[static_cast<std::size_t>(label[i])]) > d_best) label[i] = j;
    }
    const double w = objective(sigs, label, centroids);
    const double prev = res.wcss_trace.back();
    if (w > prev + 1e-9 * std::max(1.0, prev))
      throw Error("k-means objective increased from " + std::to_string(prev) + " to " + std::to_string(w));
    res.wcss_trace.push_back(w);
    res.iterations = it + 1;
    if (shift < options.tolerance) {
      res.converged = true;
      break;
    }
  }

  res.assignment.centroids = centroids;
  for (std::size_t i = 0; i < n; ++i) res.assignment.station_cluster[sigs[i].station] = label[i];
  return res;
}

ElbowResult choose_k(std::span<const StationSignature> sigs, int k_max, std::uint64_t seed) {
  ElbowResult out;
  const int top = std::min<int>(k_max, static_cast<int>(sigs.size()));
  if (top < 1) throw ConfigError("elbow search needs at least one station");
  for (int k = 1; k <= top; ++k) out.wcss_by_k.push_back(kmeans(sigs, k, seed).wcss());
  out.k = 1;
  if (top < 3) return out;
  const double w0 = out.wcss_by_k.front();
  const double w1 = out.wcss_by_k.back();
  if (!(w0 - w1 > 0.0)) return out;
  double best = 0.0;
  for (int k = 1; k <= top; ++k) {
    const double x = static_cast<double>(k - 1) / (top - 1);
    const double y = (out.wcss_by_k[static_cast<std::size_t>(k - 1)] - w1) / (w0 - w1);
    const double gap = (1.0 - x) - y;  // chord runs from (0,1) to (1,0)
    if (gap > best + 1e-12) {
      best = gap;
      out.k = k;
    }
  }
  return out;
}

int nearest_centroid(const ClusterAssignment& assignment, std::span<const double> signature) {
  if (assignment.centroids.empty()) throw ConfigError("no centroids loaded");
  std::vector<double> v(signature.begin(), signature.end());
  if (v.size() != assignment.centroids.front().size())
    throw ShapeError("signature length " + std::to_string(v.size()) + " does not match centroid length " +
                     std::to_string(assignment.centroids.front().size()));
  return nearest(assignment.centroids, v, nullptr);
}

void check_new_station_coverage(const ClusterAssignment& assignment, const ingest::StationRegistry& registry) {
  std::map<int, std::pair<int, int>> tally;  // cluster -> (existing, new)
  for (const auto& [id, c] : assignment.station_cluster) {
    const auto* s = registry.find(id);
    if (!s) continue;
    if (s->status == ingest::StationStatus::active_existing) ++tally[c].first;
    if (s->status == ingest::StationStatus::new_station) ++tally[c].second;
  }
  std::ostringstream bad;
  for (const auto& [c, t] : tally)
    if (t.second > 0 && t.first == 0) bad << " " << c << " (" << t.second << " new)";
  if (!bad.str().empty())
    throw ConfigError("clusters with new stations but no active existing station to learn from:" + bad.str() +
                      "; lower K or widen the station set");
}

void write_clusters(const std::filesystem::path& assignments, const std::filesystem::path& centroids,
                    const ClusterAssignment& assignment, std::span<const std::string> channel_names) {
  for (const auto* p : {&assignments, &centroids})
    if (p->has_parent_path()) std::filesystem::create_directories(p->parent_path());
  std::ofstream a(assignments);
  if (!a) throw Error("cannot write " + assignments.string());
  a << "station\tcluster\n";
  for (const auto& [id, c] : assignment.station_cluster) a << id << '\t' << c << '\n';

  std::ofstream c(centroids);
  if (!c) throw Error("cannot write " + centroids.string());
  c << "cluster";
  for (std::size_t i = 0; i < (assignment.centroids.empty() ? 0 : assignment.centroids[0].size()); ++i)
    c << '\t' << (i < channel_names.size() ? channel_names[i] : "c" + std::to_string(i));
  c << '\n';
  char buf[40];
  for (std::size_t j = 0; j < assignment.centroids.size(); ++j) {
    c << j;
    for (double v : assignment.centroids[j]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      c << '\t' << buf;
    }
    c << '\n';
  }
}

ClusterAssignment read_clusters(const std::filesystem::path& assignments, const std::filesystem::path& centroids) {
  ClusterAssignment out;
  std::vector<std::string> row;
  {
    std::ifstream in(assignments);
    if (!in) throw Error("cannot read " + assignments.string());
    DelimitedReader r(in, '\t');
    while (r.next(row)) {
      auto c = row.size() >= 2 ? parse_int(row[1]) : std::nullopt;
      if (!c) throw Error(assignments.string() + ":" + std::to_string(r.line_number()) + ": malformed record");
      out.station_cluster[row[0]] = static_cast<int>(*c);
    }
  }
  std::ifstream in(centroids);
  if (!in) throw Error("cannot read " + centroids.string());
  DelimitedReader r(in, '\t');
  while (r.next(row)) {
    auto id = parse_int(row[0]);
    if (!id || *id != static_cast<long long>(out.centroids.size()))
      throw Error(centroids.string() + ": centroids must be listed in order");
    std::vector<double> v;
    for (std::size_t i = 1; i < row.size(); ++i) {
      auto x = parse_double(row[i]);
      if (!x) throw Error(centroids.string() + ":" + std::to_string(r.line_number()) + ": malformed value");
      v.push_back(*x);
    }
    out.centroids.push_back(std::move(v));
  }
  for (const auto& [id, c] : out.station_cluster)
    if (c < 0 || c >= out.k()) throw Error("station " + id + " assigned to unknown cluster " + std::to_string(c));
  return out;
}

}  // namespace atcor::cluster
