#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/grid/heatmap.hpp"
#include "atcor/ingest/stations.hpp"

namespace atcor::cluster {

struct StationSignature {
  std::string station;
  std::vector<double> vector;  // length P
};

// v[c] = sum over cells of the time-mean of the heatmaps at channel c.
// Throws Error on an empty sequence, ShapeError on mixed shapes.
StationSignature signature(const std::string& station, std::span<const grid::Heatmap> heatmaps);

// Euclidean distance. Throws ShapeError on length mismatch.
double pairwise_score(std::span<const double> a, std::span<const double> b);

struct ClusterAssignment {
  std::map<std::string, int> station_cluster;
  std::vector<std::vector<double>> centroids;

  int k() const { return static_cast<int>(centroids.size()); }
  std::vector<std::string> members(int cluster) const;
};

struct KMeansResult {
  ClusterAssignment assignment;
  std::vector<double> wcss_trace;  // after seeding, then after every Lloyd iteration
  int iterations = 0;
  bool converged = false;
  double wcss() const { return wcss_trace.empty() ? 0.0 : wcss_trace.back(); }
};

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-9;  // max centroid shift that counts as converged
};

// k-means++ seeding then Lloyd iterations. Ties go to the lowest cluster
// index. An empty cluster takes the point farthest from its centroid among
// clusters holding more than one point. Deterministic given `seed`.
// Throws ConfigError when k < 1 or k exceeds the number of signatures, and
// Error if the objective ever increases.
KMeansResult kmeans(std::span<const StationSignature> signatures, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

struct ElbowResult {
  int k = 1;
  std::vector<double> wcss_by_k;  // index 0 is K = 1
};

// Runs K = 1..min(k_max, n) and picks the knee of the WCSS curve: the K whose
// point lies farthest below the chord joining the first and last points,
// both axes scaled to [0, 1].
ElbowResult choose_k(std::span<const StationSignature> signatures, int k_max, std::uint64_t seed);

// Index of the nearest centroid, lowest index on ties.
int nearest_centroid(const ClusterAssignment& assignment, std::span<const double> signature);

// Throws ConfigError naming every cluster that holds a new station but no
// active existing station.
void check_new_station_coverage(const ClusterAssignment& assignment, const ingest::StationRegistry& registry);

// Text tables: "station<TAB>cluster" and "cluster<TAB><channel>..." with one
// centroid per line.
void write_clusters(const std::filesystem::path& assignments, const std::filesystem::path& centroids,
                    const ClusterAssignment& assignment, std::span<const std::string> channel_names);
ClusterAssignment read_clusters(const std::filesystem::path& assignments, const std::filesystem::path& centroids);

}  // namespace atcor::cluster
