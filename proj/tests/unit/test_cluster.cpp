#include <doctest.h>

#include <filesystem>
#include <random>

#include "atcor/cluster/cluster.hpp"
#include "atcor/common/error.hpp"

namespace fs = std::filesystem;
using namespace atcor;
using namespace atcor::cluster;

namespace {

std::vector<StationSignature> blobs(std::mt19937_64& g, int k, int per, double spread) {
  std::normal_distribution<double> n(0.0, spread);
  std::vector<StationSignature> out;
  // centres on the axes so no three are collinear
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < per; ++i) {
      std::vector<double> v{n(g), n(g), n(g)};
      if (c > 0) v[static_cast<std::size_t>(c - 1) % 3] += 10.0 * (1 + (c - 1) / 3);
      out.push_back({"c" + std::to_string(c) + "_" + std::to_string(i), v});
    }
  return out;
}

}  // namespace

TEST_CASE("signature sums the time-mean over cells per channel") {
  grid::Heatmap a(3, 3, 2), b(3, 3, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      a.at(r, c, 0) = 1.0;
      b.at(r, c, 0) = 3.0;
      a.at(r, c, 1) = r - c;
    }
  const std::vector<grid::Heatmap> hs{a, b};
  const auto s = signature("x", hs);
  CHECK(s.vector[0] == doctest::Approx(18.0));
  CHECK(s.vector[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(signature("x", std::vector<grid::Heatmap>{}), Error);
  const std::vector<grid::Heatmap> mixed{a, grid::Heatmap(3, 3, 3)};
  CHECK_THROWS_AS(signature("x", mixed), ShapeError);
}

TEST_CASE("pairwise score is euclidean") {
  const std::vector<double> a{0.0, 3.0}, b{4.0, 0.0}, c{1.0};
  CHECK(pairwise_score(a, b) == 5.0);
  CHECK_THROWS_AS(pairwise_score(a, c), ShapeError);
}

TEST_CASE("k-means recovers separated blobs, never increases its objective and is seeded") {
  std::mt19937_64 g(41);
  const auto sigs = blobs(g, 3, 12, 0.5);
  const auto r = kmeans(sigs, 3, 7);
  CHECK(r.converged);
  for (std::size_t i = 1; i < r.wcss_trace.size(); ++i) CHECK(r.wcss_trace[i] <= r.wcss_trace[i - 1] + 1e-9);
  for (int c = 0; c < 3; ++c) {
    const auto members = r.assignment.members(r.assignment.station_cluster.at("c" + std::to_string(c) + "_0"));
    CHECK(members.size() == 12);
    for (const auto& m : members) CHECK(m.rfind("c" + std::to_string(c) + "_", 0) == 0);
  }
  const auto again = kmeans(sigs, 3, 7);
  CHECK(again.assignment.station_cluster == r.assignment.station_cluster);
  CHECK(again.assignment.centroids == r.assignment.centroids);
  CHECK_THROWS_AS(kmeans(sigs, 0, 1), ConfigError);
  CHECK_THROWS_AS(kmeans(sigs, 37, 1), ConfigError);
}

TEST_CASE("k-means with k equal to n gives zero objective") {
  std::mt19937_64 g(42);
  const auto sigs = blobs(g, 2, 3, 1.0);
  CHECK(kmeans(sigs, 6, 1).wcss() == doctest::Approx(0.0));
}

TEST_CASE("elbow picks the planted cluster count") {
  std::mt19937_64 g(43);
  const auto sigs = blobs(g, 4, 10, 0.3);
  const auto e = choose_k(sigs, 10, 3);
  CHECK(e.k == 4);
  CHECK(e.wcss_by_k.size() == 10);
}

TEST_CASE("nearest centroid breaks ties toward the lower index") {
  ClusterAssignment a;
  a.centroids = {{1.0, 0.0}, {-1.0, 0.0}, {5.0, 5.0}};
  CHECK(nearest_centroid(a, std::vector<double>{0.0, 0.0}) == 0);
  CHECK(nearest_centroid(a, std::vector<double>{-0.9, 0.0}) == 1);
}

TEST_CASE("clusters holding only new stations are reported") {
  ClusterAssignment a;
  a.centroids = {{0.0}, {1.0}};
  a.station_cluster = {{"old", 0}, {"fresh", 1}};
  ingest::StationRegistry reg;
  reg.stations["old"].id = "old";
  reg.stations["old"].status = ingest::StationStatus::active_existing;
  reg.stations["fresh"].id = "fresh";
  reg.stations["fresh"].status = ingest::StationStatus::new_station;
  CHECK_THROWS_AS(check_new_station_coverage(a, reg), ConfigError);
  a.station_cluster["fresh"] = 0;
  CHECK_NOTHROW(check_new_station_coverage(a, reg));
}

TEST_CASE("cluster tables round-trip") {
  std::mt19937_64 g(44);
  const auto r = kmeans(blobs(g, 2, 4, 0.5), 2, 1);
  const auto dir = fs::temp_directory_path() / "atcor_unit_clusters";
  fs::create_directories(dir);
  const std::vector<std::string> names{"a", "b", "c"};
  write_clusters(dir / "c.tsv", dir / "m.tsv", r.assignment, names);
  const auto back = read_clusters(dir / "c.tsv", dir / "m.tsv");
  CHECK(back.station_cluster == r.assignment.station_cluster);
  REQUIRE(back.k() == 2);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(back.centroids[c][i] == doctest::Approx(r.assignment.centroids[c][i]).epsilon(1e-15));
  fs::remove_all(dir);
}
