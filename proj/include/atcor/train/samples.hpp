#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/ingest/external.hpp"
#include "atcor/model/forecaster.hpp"

namespace atcor::train {

// Per-station aligned inputs over the store's timeline.
struct StationFrames {
  std::string station;
  std::vector<double> heatmaps;       // intervals x heatmap size; may be empty for usage-only stores
  std::vector<model::Usage> usage;    // divided by `scale`
  std::vector<std::uint8_t> present;  // 0 marks an interval with missing data
  model::Usage scale{1.0, 1.0};
};

// Everything a window needs, on one timeline starting at t0.
struct SeriesStore {
  CivilTime t0;
  int interval_hours = 1;
  std::size_t heatmap_size = 0;
  std::vector<ingest::ExternalVector> externals;  // raw, one per interval
  std::vector<StationFrames> stations;

  std::size_t intervals() const { return externals.size(); }
  std::size_t index_of(const std::string& station) const;  // throws Error when absent
};

struct Sample {
  std::uint32_t station = 0;  // index into SeriesStore::stations
  std::uint32_t start = 0;    // first input interval; target is start + lookback
  bool operator==(const Sample&) const = default;
};

// Windows sliding by one interval whose inputs and target all lie in
// [first, last) and are present. Stations with fewer than lookback + 1
// intervals in range are skipped with a warning.
std::vector<Sample> make_samples(const SeriesStore& store, std::span<const std::size_t> stations, std::size_t first,
                                 std::size_t last, int lookback);

model::InputWindow window_of(const SeriesStore& store, const Sample& s, int lookback);
model::Usage target_of(const SeriesStore& store, const Sample& s, int lookback);

// Samples whose target interval is before `boundary` go to .first.
std::pair<std::vector<Sample>, std::vector<Sample>> split_by_target(std::span<const Sample> samples,
                                                                    std::size_t boundary, int lookback);

// Order-sensitive 64-bit hash of the sample list (station names included),
// stamped into reports so schemes can be checked to share one sample set.
std::uint64_t sample_set_hash(const SeriesStore& store, std::span<const Sample> samples);

}  // namespace atcor::train
