#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atcor/pipeline/evaluation.hpp"
#include "atcor/pipeline/stages.hpp"

// Read-only prediction service over one artifact directory. Every handler
// is const over state loaded at construction, so requests can run
// concurrently.
namespace atcor::service {

struct Response {
  int status = 200;
  std::string body;  // JSON
};

struct ServiceOptions {
  std::filesystem::path artifacts;
  std::string city;             // empty accepts whatever the artifacts hold
  std::string scheme = "atcor"; // model used for predictions
  std::size_t default_limit = 100;
  std::size_t max_limit = 1000;
  int default_horizon = 24;
  int max_horizon = 24 * 14;
};

// Files the service needs before it can read the study and checkpoints.
std::vector<std::filesystem::path> required_artifacts(const pipeline::ArtifactPaths& paths);

struct ServiceState {
  pipeline::CityData data;
  pipeline::Features features;
  pipeline::Experiment experiment;
  pipeline::Study study;
  pipeline::ModelBank models;
  std::map<std::string, model::Usage> scales;
  std::vector<std::string> channel_names;
};

class Service {
 public:
  // Loads the artifacts; throws Error listing every missing path.
  explicit Service(const ServiceOptions& options);
  // Over state already in memory.
  Service(ServiceOptions options, std::shared_ptr<const ServiceState> state);

  Response health() const;
  Response stations(std::optional<std::size_t> offset, std::optional<std::size_t> limit) const;
  Response clusters() const;
  // One-step-ahead forecasts for interval starts in [from, to) from observed
  // inputs, with the truth alongside.
  Response prediction(const std::string& station, const std::string& from, const std::string& to) const;
  // Body: {"lat", "lon", "launch", "horizon"?, "neighbors"?: [ids],
  // "max_neighbors"?, "radius_km"?}.
  Response candidates(const std::string& body) const;

  const ServiceState& state() const { return *state_; }

 private:
  ServiceOptions options_;
  std::shared_ptr<const ServiceState> state_;
};

// Throws Error listing missing files or checkpoints.
std::shared_ptr<const ServiceState> load_state(const std::filesystem::path& artifacts,
                                               const std::string& scheme = "atcor");

}  // namespace atcor::service
