#pragma once

// A small synthetic city taken through ingest, clustering and training once
// per test binary, with its artifacts on disk.

#include <filesystem>
#include <fstream>
#include <memory>

#include "atcor/pipeline/evaluation.hpp"
#include "atcor/synth/synthetic_city.hpp"

namespace fixture {

inline const char* kExperiment = R"({
  "seed": 3,
  "protocol": {
    "train": "2019-04-14..2019-05-05",
    "test": "2019-05-05..2019-05-08",
    "deploy": "2019-04-20..2019-05-08",
    "new_window_hours": 72
  },
  "model": {"hidden": 8, "convs": [[3, 3, 4], [3, 3, 4], [2, 2, 4]], "dropout": 0.1},
    "train": {"epochs": 20, "batch_size": 16, "monitor_every": 10},
  "cluster": {"k": 2},
  "stations": {"max_existing": 8}
})";

struct Built {
  std::filesystem::path root;
  atcor::synth::SyntheticCity city;
  atcor::pipeline::CityData data;
  atcor::pipeline::Experiment experiment;
  atcor::pipeline::Features features;
  atcor::pipeline::Study study;
  std::vector<atcor::pipeline::TrainOutcome> outcomes;
};

inline atcor::synth::SynthConfig synth_config() {
  atcor::synth::SynthConfig c;
  c.start = {2019, 3, 15};
  c.days = 56;
  c.rows = 5;
  c.cols = 6;
  c.new_stations = 3;
  c.new_first = {2019, 4, 22};
  c.new_last = {2019, 5, 1};
  return c;
}

inline const Built& built() {
  static const std::unique_ptr<Built> b = [] {
    namespace pl = atcor::pipeline;
    auto out = std::make_unique<Built>();
    out->root = std::filesystem::temp_directory_path() / "atcor_unit_fixture";
    std::filesystem::remove_all(out->root);
    std::filesystem::create_directories(out->root);
    out->city = atcor::synth::generate_city(synth_config());
    out->data = atcor::synth::to_city_data(out->city);
    out->experiment = pl::parse_experiment(kExperiment, out->data.city);
    const pl::ArtifactPaths paths(out->root);
    pl::save_city_data(paths, out->data);
    std::ofstream(paths.experiment()) << pl::experiment_json(out->experiment) << "\n";
    out->features = pl::make_features(out->data, out->experiment.grid);
    out->study = pl::run_study(out->data, out->features, out->experiment);
    pl::write_study(paths, out->study, out->features.channel_names);
    out->outcomes = pl::run_train(paths, out->data, out->features, out->experiment, out->study, {});
    return out;
  }();
  return *b;
}

}  // namespace fixture
