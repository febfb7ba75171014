#include <doctest.h>

#include <fstream>
#include <set>

#include "atcor/common/error.hpp"
#include "atcor/pipeline/stages.hpp"
#include "fixture.hpp"

using namespace atcor;
namespace pl = atcor::pipeline;

TEST_CASE("synthetic city is deterministic in its seed") {
  auto c = fixture::synth_config();
  c.days = 3;
  c.rows = 3;
  c.cols = 3;
  c.new_stations = 0;
  c.clone_fixture = false;
  const auto a = synth::generate_city(c);
  const auto b = synth::generate_city(c);
  REQUIRE(a.trips.size() == b.trips.size());
  REQUIRE(!a.trips.empty());
  for (std::size_t i = 0; i < a.trips.size(); ++i) {
    CHECK(a.trips[i].start_time == b.trips[i].start_time);
    CHECK(a.trips[i].start_station == b.trips[i].start_station);
    CHECK(a.trips[i].end_station == b.trips[i].end_station);
  }
  c.seed += 1;
  const auto d = synth::generate_city(c);
  CHECK((d.trips.size() != a.trips.size() || d.trips.front().start_station != a.trips.front().start_station ||
         d.trips.back().end_time != a.trips.back().end_time));
}

TEST_CASE("experiment overrides reject unknown keys") {
  const auto city = ingest::builtin_city("nyc");
  CHECK_THROWS_AS(pl::parse_experiment(R"({"sed": 1})", city), ConfigError);
  CHECK_THROWS_AS(pl::parse_experiment(R"({"model": {"hiden": 4}})", city), ConfigError);
  CHECK_THROWS_AS(pl::parse_experiment(R"({"schemes": ["arima"]})", city), ConfigError);
  const auto e = pl::parse_experiment(R"({"model": {"hidden": 4}, "schemes": ["atcor"]})", city);
  CHECK(e.model.hidden == 4);
  // Serialized experiments parse back to the same thing.
  const auto again = pl::parse_experiment(pl::experiment_json(e), city);
  CHECK(pl::experiment_json(again) == pl::experiment_json(e));
}

TEST_CASE("first usage index needs a run of nonzero intervals") {
  const std::vector<model::Usage> u{{0, 0}, {1, 0}, {0, 0}, {0, 2}, {1, 1}, {3, 0}};
  CHECK(pl::first_usage_index(u, 1) == 1);
  CHECK(pl::first_usage_index(u, 2) == 3);
  CHECK(pl::first_usage_index(u, 3) == 3);
  CHECK(pl::first_usage_index(u, 4) == static_cast<std::size_t>(-1));
  CHECK(pl::first_usage_index({}, 1) == static_cast<std::size_t>(-1));
}

TEST_CASE("trip file globs expand sorted") {
  const auto dir = std::filesystem::temp_directory_path() / "atcor_glob_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (const char* n : {"b-trips.csv", "a-trips.csv", "notes.txt"}) std::ofstream(dir / n) << "x\n";
  const auto m = pl::expand_glob((dir / "*-trips.csv").string());
  REQUIRE(m.size() == 2);
  CHECK(m[0].filename() == "a-trips.csv");
  CHECK(m[1].filename() == "b-trips.csv");
  CHECK(pl::expand_glob((dir / "notes.txt").string()).size() == 1);
  CHECK_THROWS_AS(pl::expand_glob((dir / "*.parquet").string()), IngestError);
}

TEST_CASE("usage scales are per-station maxima with a floor of one") {
  const auto& b = fixture::built();
  const auto& st = b.study.existing.front();
  const TimeSpan span = b.experiment.protocol.train;
  const std::vector<std::string> ids{st, "no-such-station"};
  const auto scales = pl::usage_scales(b.data, ids, span);
  const auto obs = pl::observed_usage(b.data, std::vector<std::string>{st}, span).at(st);
  double mp = 0.0, md = 0.0;
  for (const auto& u : obs) {
    mp = std::max(mp, u[0]);
    md = std::max(md, u[1]);
  }
  CHECK(scales.at(st)[0] == mp);
  CHECK(scales.at(st)[1] == md);
  CHECK(scales.at("no-such-station")[0] == 1.0);
  CHECK(scales.at("no-such-station")[1] == 1.0);
}

TEST_CASE("study and training artifacts") {
  const auto& b = fixture::built();
  const pl::ArtifactPaths paths(b.root);
  CHECK(b.study.assignment.k() == 2);
  CHECK(b.study.existing.size() <= 8);
  CHECK(!b.study.existing.empty());
  for (const auto& id : b.study.existing)
    CHECK(b.study.registry.find(id)->status == ingest::StationStatus::active_existing);
  const auto reread = pl::read_study(paths);
  CHECK(reread.existing == b.study.existing);
  CHECK(reread.assignment.station_cluster == b.study.assignment.station_cluster);

  std::set<std::pair<int, std::string>> trained;
  for (const auto& o : b.outcomes) {
    trained.insert({o.cluster, o.scheme});
    CHECK(std::filesystem::exists(paths.model(o.cluster, o.scheme)));
  }
  CHECK(!trained.empty());
  const auto loaded = pl::read_scales(paths.scales());
  for (const auto& id : b.study.existing) CHECK(loaded.count(id) == 1);

  std::vector<int> clusters;
  for (const auto& [c, s] : trained) clusters.push_back(c);
  clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
  const auto bank = pl::ModelBank::load(paths, clusters, b.experiment.schemes);
  const pl::EvalContext ctx{b.data, b.features, b.experiment, b.study, bank, loaded};
  const auto reports = pl::eval_existing(ctx, b.experiment.schemes);
  CHECK(reports.size() == b.experiment.schemes.size());
  for (const auto& r : reports) {
    CHECK(r.pickups.n > 0);
    CHECK(r.pickups.n == r.dropoffs.n);
  }
  CHECK_THROWS_AS(pl::ModelBank::load(paths, std::vector<int>{7}, b.experiment.schemes), Error);
}
