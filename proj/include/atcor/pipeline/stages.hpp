#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atcor/cluster/cluster.hpp"
#include "atcor/pipeline/dataset.hpp"
#include "atcor/pipeline/experiment.hpp"

namespace atcor::pipeline {

struct IngestInputs {
  ingest::CityConfig city;
  std::vector<fs::path> trip_files;
  fs::path weather;
  fs::path pois;
};

struct IngestSummary {
  ingest::ParseStats stats;
  std::size_t relocated = 0;
  std::size_t stations = 0;
  std::size_t trips = 0;
  TimeSpan span;
};

// Parses every input, resolves relocations and builds the externals for
// whole days covering the trips. Stations are all marked other until a
// protocol classifies them.
CityData ingest_city(const IngestInputs& inputs, IngestSummary* summary = nullptr);
std::string ingest_summary_text(const IngestSummary& s);

// Expands a trip-file argument: a path or a glob with '*' / '?' in the file
// name part. Matches are sorted; throws IngestError when nothing matches.
std::vector<fs::path> expand_glob(const std::string& pattern);

// Stations studied under one protocol and their clusters.
struct Study {
  ingest::StationRegistry registry;   // protocol statuses
  std::vector<std::string> existing;  // studied active existing stations
  std::vector<NewStationWindow> fresh;
  std::vector<std::pair<std::string, std::string>> excluded;
  std::vector<cluster::StationSignature> signatures;
  cluster::ClusterAssignment assignment;
  std::vector<double> wcss_by_k;  // empty when K was given

  int cluster_of(const std::string& station) const;  // throws Error when unassigned
  // Studied existing stations of one cluster.
  std::vector<std::string> existing_in(int cluster) const;
};

// Signatures over the training span, from normalized heatmaps unless
// raw_signatures; built in chunks so memory stays O(heatmap).
cluster::StationSignature span_signature(const Features& features, const std::string& key, const LatLon& coord,
                                         std::size_t first, std::size_t count, bool raw);

Study run_study(const CityData& data, const Features& features, const Experiment& experiment);
void write_study(const ArtifactPaths& paths, const Study& study, std::span<const std::string> channel_names);
Study read_study(const ArtifactPaths& paths);

struct TrainOutcome {
  int cluster = 0;
  std::string scheme;
  train::TrainResult result;
  std::size_t train_samples = 0;
  std::size_t monitor_samples = 0;
  std::uint64_t sample_hash = 0;
  std::string fingerprint;
};

using TrainProgress = std::function<void(int cluster, const std::string& scheme, int epoch, double loss)>;

// Trains every scheme for the listed clusters (all when empty) and writes
// models/cluster_<k>/<scheme>.ckpt, the loss traces and station scales.
std::vector<TrainOutcome> run_train(const ArtifactPaths& paths, const CityData& data, const Features& features,
                                    const Experiment& experiment, const Study& study, std::span<const int> clusters,
                                    const TrainProgress& progress = {});

// Checkpoints per (cluster, scheme).
class ModelBank {
 public:
  // Throws Error naming every (cluster, scheme) whose checkpoint is missing.
  static ModelBank load(const ArtifactPaths& paths, std::span<const int> clusters,
                        std::span<const std::string> schemes);

  void add(int cluster, const std::string& scheme, std::unique_ptr<model::Forecaster> m);
  const model::Forecaster& get(int cluster, const std::string& scheme) const;
  bool has(int cluster, const std::string& scheme) const;
  std::vector<int> clusters() const;

 private:
  std::map<std::pair<int, std::string>, std::shared_ptr<const model::Forecaster>> models_;
};

}  // namespace atcor::pipeline
