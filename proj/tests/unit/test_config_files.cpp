#include <doctest.h>

#include "atcor/ingest/city_config.hpp"
#include "atcor/pipeline/experiment.hpp"

using namespace atcor;

namespace {
const std::filesystem::path kConfig = ATCOR_CONFIG_DIR;
}

TEST_CASE("shipped city configs match the built-in dialects") {
  for (const auto& id : ingest::builtin_city_ids()) {
    CAPTURE(id);
    const auto loaded = ingest::load_city_config(kConfig / "cities" / (id + ".json"));
    CHECK(ingest::city_config_json(loaded) == ingest::city_config_json(ingest::builtin_city(id)));
  }
}

TEST_CASE("shipped experiments load") {
  for (const auto& id : ingest::builtin_city_ids()) {
    CAPTURE(id);
    const auto city = ingest::builtin_city(id);
    const auto e = pipeline::load_experiment(kConfig / ("experiment_" + id + ".json"), city);
    CHECK(pipeline::experiment_json(e) == pipeline::experiment_json(pipeline::default_experiment(city)));
  }
  const auto nyc = ingest::builtin_city("nyc");
  for (const char* name : {"experiment_smoke.json", "experiment_downscaled.json"}) {
    CAPTURE(name);
    const auto e = pipeline::load_experiment(kConfig / name, nyc);
    CHECK_NOTHROW(e.validate());
  }
}
