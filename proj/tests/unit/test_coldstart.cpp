#include <doctest.h>

#include <cmath>

#include "atcor/coldstart/coldstart.hpp"
#include "atcor/common/error.hpp"

using namespace atcor;
using namespace atcor::coldstart;

namespace {

const LatLon kSite{41.88, -87.63};

ingest::UsageSeries series(const std::string& id, CivilTime t0, std::vector<std::int64_t> p,
                           std::vector<std::int64_t> d) {
  ingest::UsageSeries s;
  s.station = id;
  s.t0 = t0;
  s.pickups = std::move(p);
  s.dropoffs = std::move(d);
  return s;
}

ingest::StationInfo info(const std::string& id, const LatLon& c, ingest::StationStatus st) {
  ingest::StationInfo i;
  i.id = id;
  i.coord = c;
  i.status = st;
  return i;
}

}  // namespace

TEST_CASE("similarity is inverse distance with a one metre floor") {
  const auto p = offset_position(kSite, 2000.0, 0.0);
  CHECK(similarity(kSite, p) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(similarity(kSite, kSite) == doctest::Approx(1.0 / kMinDistanceKm));
  CHECK(similarity(kSite, offset_position(kSite, 0.2, 0.0)) == doctest::Approx(1000.0));
}

TEST_CASE("a neighbour on top of the target dominates the weights") {
  const std::vector<ExistingSite> sites{{"here", kSite}, {"away", offset_position(kSite, 1000.0, 0.0)}};
  const auto w = neighbor_weights("cand", kSite, sites);
  CHECK(w.neighbors[0].omega == doctest::Approx(1e6 / (1e6 + 1.0)).epsilon(1e-9));
  CHECK(w.neighbors[0].distance_km == kMinDistanceKm);
  CHECK_THROWS_AS(neighbor_weights("cand", kSite, std::vector<ExistingSite>{}), Error);
}

TEST_CASE("neighbour selection honours radius, cap, status and exclusion") {
  ingest::StationRegistry reg;
  for (int i = 1; i <= 6; ++i) {
    const auto id = "s" + std::to_string(i);
    reg.stations[id] = info(id, offset_position(kSite, 1000.0 * i, 0.0), ingest::StationStatus::active_existing);
  }
  reg.stations["n"] = info("n", offset_position(kSite, 10.0, 0.0), ingest::StationStatus::new_station);
  NeighborPolicy pol{3, 4.5};
  auto sel = select_neighbors(kSite, reg, pol);
  REQUIRE(sel.size() == 3);
  CHECK(sel[0].station == "s1");
  CHECK(sel[2].station == "s3");
  pol.max_neighbors = 10;
  CHECK(select_neighbors(kSite, reg, pol).size() == 4);
  CHECK(select_neighbors(kSite, reg, pol, "s1").front().station == "s2");
  pol.radius_km = 0.5;
  CHECK(select_neighbors(kSite, reg, pol).empty());
}

TEST_CASE("virtual usage is the omega-weighted neighbour usage") {
  const CivilTime t0 = make_time(2019, 6, 10);
  const std::vector<ExistingSite> sites{{"a", offset_position(kSite, 1000.0, 0.0)},
                                        {"b", offset_position(kSite, -2000.0, 0.0)}};
  const auto w = neighbor_weights("new", kSite, sites);
  std::map<std::string, ingest::UsageSeries> s{{"a", series("a", t0, {10, 0, 5}, {0, 5, 5})},
                                               {"b", series("b", t0, {0, 10, 5}, {5, 0, 5})}};
  const auto span = virtual_span(t0.plus_hours(3), 3, 1);
  CHECK(span.begin == t0);
  const auto v = virtual_usage(w, s, span, 1);
  CHECK(v.pickups[0] == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(v.pickups[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(v.pickups[2] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(v.dropoffs[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(v.dropoffs[1] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("neighbours without coverage are dropped and the rest renormalised") {
  const CivilTime t0 = make_time(2019, 6, 10);
  const std::vector<ExistingSite> sites{{"a", offset_position(kSite, 1000.0, 0.0)},
                                        {"b", offset_position(kSite, -2000.0, 0.0)}};
  const auto w = neighbor_weights("new", kSite, sites);
  std::map<std::string, ingest::UsageSeries> s{{"a", series("a", t0, {4, 4}, {1, 1})},
                                               {"b", series("b", t0.plus_hours(1), {9}, {9})}};
  const auto v = virtual_usage(w, s, {t0, t0.plus_hours(2)}, 1);
  REQUIRE(v.dropped == std::vector<std::string>{"b"});
  CHECK(v.weights.neighbors.size() == 1);
  CHECK(v.weights.neighbors[0].omega == doctest::Approx(1.0));
  CHECK(v.pickups == std::vector<double>{4.0, 4.0});
  s.erase("a");
  CHECK_THROWS_AS(virtual_usage(w, s, {t0, t0.plus_hours(2)}, 1), Error);
}
