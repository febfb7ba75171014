#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include "atcor/common/error.hpp"
#include "atcor/service/http_server.hpp"
#include "fixture.hpp"

using namespace atcor;
using nlohmann::json;

namespace {

const service::Service& svc() {
  static const service::Service s([] {
    service::ServiceOptions o;
    o.artifacts = fixture::built().root;
    o.max_limit = 5;
    return o;
  }());
  return s;
}

json body(const service::Response& r) { return json::parse(r.body); }

// A studied existing station whose cluster has a serving model.
std::string served_station() {
  const auto& st = svc().state();
  for (const auto& id : st.study.existing)
    if (st.models.has(st.study.cluster_of(id), "atcor")) return id;
  FAIL("no studied station has a model");
  return {};
}

std::string candidate_body(double lat, double lon, json extra = json::object()) {
  extra["lat"] = lat;
  extra["lon"] = lon;
  if (!extra.contains("launch")) extra["launch"] = "2019-05-06 00:00:00";
  return extra.dump();
}

}  // namespace

TEST_CASE("service reports missing artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "atcor_empty_artifacts";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  service::ServiceOptions o;
  o.artifacts = dir;
  try {
    service::Service s(o);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("city.json") != std::string::npos);
    CHECK(what.find("clusters.tsv") != std::string::npos);
  }
}

TEST_CASE("health and clusters") {
  const auto h = svc().health();
  CHECK(h.status == 200);
  const auto hj = body(h);
  CHECK(hj["status"] == "ok");
  CHECK(hj["interval_hours"] == 1);
  CHECK(hj["clusters"] == 2);
  const auto c = body(svc().clusters());
  CHECK(c["k"] == 2);
  REQUIRE(c["clusters"].size() == 2);
  std::size_t members = 0;
  for (const auto& cl : c["clusters"]) {
    CHECK(cl["centroid"].size() == c["channels"].size());
    members += cl["stations"].size();
  }
  CHECK(members > 0);
}

TEST_CASE("station pagination") {
  const auto all = body(svc().stations(0, 5));
  const std::size_t total = all["total"];
  REQUIRE(total > 5);
  CHECK(all["stations"].size() == 5);
  // Pages are stable and disjoint.
  CHECK(svc().stations(0, 5).body == svc().stations(0, 5).body);
  const auto next = body(svc().stations(5, 5));
  CHECK(next["stations"][0]["id"] != all["stations"][4]["id"]);
  CHECK(body(svc().stations(total, 5))["stations"].empty());
  CHECK(body(svc().stations(total + 100, std::nullopt))["stations"].empty());
  // Limits above the maximum are clipped.
  const auto clipped = body(svc().stations(0, 999));
  CHECK(clipped["limit"] == 5);
  CHECK(clipped["stations"].size() == 5);
}

TEST_CASE("prediction endpoint") {
  const auto id = served_station();
  CHECK(svc().prediction("nope", "2019-05-05 00:00:00", "2019-05-05 06:00:00").status == 404);
  CHECK(svc().prediction(id, "2019-05-05 00:30:00", "2019-05-05 06:00:00").status == 400);
  CHECK(svc().prediction(id, "yesterday", "2019-05-05 06:00:00").status == 400);
  CHECK(svc().prediction(id, "2019-05-05 06:00:00", "2019-05-05 00:00:00").status == 400);
  CHECK(svc().prediction(id, "2021-01-01 00:00:00", "2021-01-01 06:00:00").status == 422);

  const auto r = svc().prediction(id, "2019-05-05 00:00:00", "2019-05-05 06:00:00");
  REQUIRE(r.status == 200);
  const auto j = body(r);
  CHECK(j["station"] == id);
  REQUIRE(j["predictions"].size() == 6);
  CHECK(j["predictions"][0]["time"] == "2019-05-05 00:00:00");
  for (const auto& p : j["predictions"]) {
    CHECK(p["pickups"].get<double>() >= 0.0);
    CHECK(p["pickups"].get<double>() == std::max(0.0, p["raw_pickups"].get<double>()));
    CHECK(p["dropoffs"].get<double>() == std::max(0.0, p["raw_dropoffs"].get<double>()));
  }
  CHECK(svc().prediction(id, "2019-05-05 00:00:00", "2019-05-05 06:00:00").body == r.body);
}

TEST_CASE("candidate endpoint") {
  const auto& st = svc().state();
  const auto id = served_station();
  const auto at = st.study.registry.find(id)->coord;

  const auto r = svc().candidates(candidate_body(at.lat, at.lon, {{"horizon", 1}}));
  REQUIRE(r.status == 200);
  const auto j = body(r);
  CHECK(j["pickups"].size() == 1);
  CHECK(j["dropoffs"].size() == 1);
  CHECK(j["pickups"][0].get<double>() >= 0.0);
  CHECK(j["lookback"] == 24);
  // A candidate on top of a station takes almost all of its weight.
  REQUIRE(!j["neighbors"].empty());
  double sum = 0.0, top = 0.0;
  std::string top_id;
  for (const auto& n : j["neighbors"]) {
    sum += n["omega"].get<double>();
    if (n["omega"].get<double>() > top) {
      top = n["omega"];
      top_id = n["station"];
    }
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(top_id == id);
  CHECK(top > 0.9);
  // Identical queries give identical answers.
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"horizon", 1}})).body == r.body);

  const auto full = body(svc().candidates(candidate_body(at.lat + 0.001, at.lon)));
  CHECK(full["pickups"].size() == 24);
  CHECK(full["times"].size() == 24);

  CHECK(svc().candidates(candidate_body(0.0, 0.0)).status == 422);
  CHECK(svc().candidates(candidate_body(at.lat + 0.001, at.lon, {{"radius_km", 0.01}})).status == 422);
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"colour", "red"}})).status == 400);
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"horizon", 0}})).status == 400);
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"launch", "2019-05-06 00:15:00"}})).status == 400);
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"launch", "2021-05-06 00:00:00"}})).status == 422);
  CHECK(svc().candidates(candidate_body(at.lat, at.lon, {{"neighbors", json::array({"nope"})}})).status == 400);
  CHECK(svc().candidates("{not json").status == 400);
  CHECK(svc().candidates(R"({"lat": 40.7})").status == 400);

  const auto pinned = body(svc().candidates(candidate_body(at.lat, at.lon, {{"neighbors", json::array({id})}})));
  REQUIRE(pinned["neighbors"].size() == 1);
  CHECK(pinned["neighbors"][0]["omega"] == 1.0);
  CHECK(pinned["neighbor_policy"]["override"] == true);
}

TEST_CASE("http surface") {
  service::HttpServer server(svc(), {});
  const int port = server.start_background();
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto r = cli.Get("/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  r = cli.Get("/stations?offset=0&limit=2");
  REQUIRE(r);
  CHECK(json::parse(r->body)["stations"].size() == 2);
  r = cli.Get("/stations?limit=abc");
  REQUIRE(r);
  CHECK(r->status == 400);
  r = cli.Get("/clusters");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto id = served_station();
  r = cli.Get(("/stations/" + id + "/prediction").c_str());
  REQUIRE(r);
  CHECK(r->status == 400);
  r = cli.Get(("/stations/" + id + "/prediction?from=2019-05-05T00:00:00&to=2019-05-05T03:00:00").c_str());
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["predictions"].size() == 3);
  r = cli.Post("/candidates", "{", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  server.stop();
}
