#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atcor/evaluate/protocol.hpp"
#include "atcor/grid/heatmap.hpp"
#include "atcor/ingest/city_config.hpp"
#include "atcor/ingest/external.hpp"
#include "atcor/ingest/pois.hpp"
#include "atcor/ingest/stations.hpp"
#include "atcor/ingest/trips.hpp"
#include "atcor/model/forecaster.hpp"
#include "atcor/train/samples.hpp"

namespace atcor::pipeline {

namespace fs = std::filesystem;

// Layout of an artifacts directory; see docs/formats.md.
struct ArtifactPaths {
  fs::path root;

  ArtifactPaths() = default;
  explicit ArtifactPaths(fs::path r) : root(std::move(r)) {}

  fs::path city() const { return root / "city.json"; }
  fs::path trips() const { return root / "trips.tsv"; }
  fs::path usage() const { return root / "usage.tsv"; }
  fs::path externals() const { return root / "externals.tsv"; }
  fs::path stations() const { return root / "stations.tsv"; }
  fs::path pois() const { return root / "pois.tsv"; }
  fs::path ingest_report() const { return root / "ingest_report.txt"; }
  fs::path experiment() const { return root / "experiment.json"; }
  fs::path heatmaps() const { return root / "heatmaps.bin"; }
  fs::path heatmaps_text() const { return root / "heatmaps.txt"; }
  fs::path signatures() const { return root / "signatures.tsv"; }
  fs::path clusters() const { return root / "clusters.tsv"; }
  fs::path centroids() const { return root / "centroids.tsv"; }
  fs::path wcss() const { return root / "wcss.tsv"; }
  fs::path study() const { return root / "study.tsv"; }
  fs::path scales() const { return root / "station_scales.tsv"; }
  fs::path models() const { return root / "models"; }
  fs::path model(int cluster, const std::string& scheme) const {
    return models() / ("cluster_" + std::to_string(cluster)) / (scheme + ".ckpt");
  }
  fs::path loss_trace(int cluster, const std::string& scheme) const {
    return models() / ("cluster_" + std::to_string(cluster)) / ("loss_" + scheme + ".tsv");
  }
  fs::path reports() const { return root / "reports"; }
  fs::path coldstart() const { return root / "coldstart"; }

  std::vector<fs::path> ingest_outputs() const { return {city(), trips(), externals(), stations(), pois()}; }
};

// Throws Error naming every path that does not exist.
void require_files(std::span<const fs::path> paths);

// Everything ingest produces, in memory.
struct CityData {
  ingest::CityConfig city;
  std::vector<ingest::TripRecord> trips;  // sorted by start time
  ingest::ExternalSeries externals;       // defines the data timeline
  ingest::PoiCatalog pois;
  ingest::StationRegistry registry;

  int interval_hours() const { return externals.interval_hours; }
  TimeSpan span() const;
  // Timeline index of an interval start; throws SpanError outside the data.
  std::size_t slot(CivilTime t) const;
  // [slot(span.begin), slot(span.begin) + n); throws SpanError when not covered.
  std::pair<std::size_t, std::size_t> slots(const TimeSpan& span) const;
};

CityData load_city_data(const ArtifactPaths& paths);
void save_city_data(const ArtifactPaths& paths, const CityData& data);

// Heatmap construction over the data timeline.
struct Features {
  grid::GridSpec grid;
  std::vector<std::string> channel_names;
  std::shared_ptr<const grid::RegionalUsageIndex> index;
  std::shared_ptr<const grid::HeatmapBuilder> builder;

  std::size_t heatmap_size() const { return grid.cells() * channel_names.size(); }
};

Features make_features(const CityData& data, const grid::GridSpec& grid);

// Statuses for one protocol: new when first used inside the deploy window
// after history_days without usage; otherwise active_existing when used on
// every day of the training span; otherwise other.
ingest::StationRegistry classify_for_protocol(const CityData& data, const evaluate::Protocol& protocol);

// Active existing stations ranked by pick-ups + drop-offs inside `span`
// (ties by id); n = 0 keeps all.
std::vector<std::string> busiest_existing(const CityData& data, const ingest::StationRegistry& registry,
                                          const TimeSpan& span, std::size_t n);

// Raw counts for many stations on the data timeline restricted to `span`.
std::map<std::string, std::vector<model::Usage>> observed_usage(const CityData& data,
                                                                std::span<const std::string> stations,
                                                                const TimeSpan& span);

// Index of the first interval that begins `run` consecutive nonzero
// intervals (pick-ups + drop-offs), or npos.
std::size_t first_usage_index(std::span<const model::Usage> usage, int run);

struct NewStationWindow {
  std::string station;
  LatLon coord;
  std::size_t first_slot = 0;  // data-timeline index of the first usage
  CivilTime first_usage;
  double daily_activity = 0.0;  // mean pick-ups + drop-offs per day over the window
};

struct NewStationSelection {
  std::vector<NewStationWindow> qualified;
  std::vector<std::pair<std::string, std::string>> excluded;  // station, reason
};

// New stations whose evaluation window is covered by the data and whose
// activity reaches protocol.activity_floor.
NewStationSelection qualify_new_stations(const CityData& data, const ingest::StationRegistry& registry,
                                         const evaluate::Protocol& protocol);

// Per-station divisors: max pick-ups and max drop-offs inside `span`;
// a zero maximum becomes 1.
std::map<std::string, model::Usage> usage_scales(const CityData& data, std::span<const std::string> stations,
                                                 const TimeSpan& span);
void write_scales(const fs::path& path, const std::map<std::string, model::Usage>& scales);
std::map<std::string, model::Usage> read_scales(const fs::path& path);

// Max |x| per external component inside `span`.
std::vector<double> external_scales(const CityData& data, const TimeSpan& span);
// Max |x| per heatmap channel over every heatmap in the store.
std::vector<double> heatmap_scales(const train::SeriesStore& store, std::size_t channels);

struct StationInput {
  std::string station;
  LatLon coord;
  std::vector<model::Usage> usage;  // raw counts, one per interval of the store span
  model::Usage scale{1.0, 1.0};
};

// Store on the timeline of `span`. Heatmaps are built at each station's
// coordinate when `features` is non-null.
train::SeriesStore build_store(const CityData& data, const Features* features, std::span<const StationInput> stations,
                               const TimeSpan& span);

// StationInputs from observed usage; stations missing from `scales` get 1.
std::vector<StationInput> observed_inputs(const CityData& data, const ingest::StationRegistry& registry,
                                          std::span<const std::string> stations, const TimeSpan& span,
                                          const std::map<std::string, model::Usage>& scales);

}  // namespace atcor::pipeline
