#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "atcor/coldstart/coldstart.hpp"
#include "atcor/evaluate/protocol.hpp"
#include "atcor/grid/heatmap.hpp"
#include "atcor/ingest/city_config.hpp"
#include "atcor/model/atcor_net.hpp"
#include "atcor/model/baselines.hpp"
#include "atcor/train/trainer.hpp"

namespace atcor::pipeline {

// Everything a run needs besides the data; config/*.json hold examples and
// docs/formats.md lists every key.
struct Experiment {
  evaluate::Protocol protocol;
  grid::GridSpec grid;
  model::ModelConfig model;        // channel names come from the city
  model::BaselineConfig baseline;  // kind is set per scheme
  train::TrainConfig train;
  std::vector<std::string> schemes{"atcor", "rnn", "lstm", "gru", "persistence"};
  int k = 0;  // 0 = elbow over 1..k_max
  int k_max = 12;
  std::uint64_t cluster_seed = 0;
  bool raw_signatures = false;    // cluster on heatmaps before center subtraction
  std::size_t max_existing = 0;   // busiest N active existing stations; 0 = all
  coldstart::NeighborPolicy neighbors;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
  // "atcor", "rnn", "lstm", "gru" or "persistence"; ConfigError otherwise.
  std::unique_ptr<model::Forecaster> make_model(const std::string& scheme) const;
};

const std::vector<std::string>& known_schemes();

// Published settings for the city with its default protocol.
Experiment default_experiment(const ingest::CityConfig& city);

// Overrides on top of default_experiment(city). Unknown keys are rejected.
Experiment parse_experiment(const std::string& json_text, const ingest::CityConfig& city);
Experiment load_experiment(const std::filesystem::path& path, const ingest::CityConfig& city);
std::string experiment_json(const Experiment& e);

}  // namespace atcor::pipeline
