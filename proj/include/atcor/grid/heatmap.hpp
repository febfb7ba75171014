#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"
#include "atcor/ingest/pois.hpp"
#include "atcor/ingest/trips.hpp"

namespace atcor::grid {

struct GridSpec {
  double cell_height_m = 500.0;  // north-south extent of one cell
  double cell_width_m = 500.0;   // east-west extent of one cell
  int rows = 11;                 // odd
  int cols = 11;                 // odd

  int center_row() const { return rows / 2; }
  int center_col() const { return cols / 2; }
  std::size_t cells() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  // Throws ConfigError unless rows/cols are odd and >= 1 and cell sizes > 0.
  void validate() const;
};

struct CellIndex {
  int row = 0;  // 0 = northernmost
  int col = 0;  // 0 = westernmost
  bool operator==(const CellIndex&) const = default;
};

// Cell holding `p` in the grid centered on `center`. Cell k along an axis
// spans [k*g - g/2, k*g + g/2) meters from the center; nullopt when outside.
std::optional<CellIndex> cell_of(const GridSpec& grid, const LatLon& center, const LatLon& p);

// G_rows x G_cols x P tensor, row-major with channel fastest:
// value(r, c, ch) = values[(r * cols + c) * channels + ch].
// Channel 0 = regional pick-ups, 1 = regional drop-offs, 2.. = POI categories.
struct Heatmap {
  std::string station;
  CivilTime time;  // interval start
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(int r, int c, int p) : rows(r), cols(c), channels(p), values(static_cast<std::size_t>(r * c * p), 0.0) {}

  double& at(int r, int c, int ch) { return values[static_cast<std::size_t>((r * cols + c) * channels + ch)]; }
  double at(int r, int c, int ch) const { return values[static_cast<std::size_t>((r * cols + c) * channels + ch)]; }
  bool operator==(const Heatmap&) const = default;
};

// Per-cell counts, row-major rows x cols.
struct RegionalGrids {
  std::vector<double> pickups;
  std::vector<double> dropoffs;
};

// Counts trip starts (pick-ups) and ends (drop-offs) inside `interval`
// falling in each cell; events outside the extent are ignored.
RegionalGrids aggregate_regional_usage(std::span<const ingest::TripRecord> trips, const GridSpec& grid,
                                       const LatLon& center, const TimeSpan& interval);

// Trip endpoints bucketed by interval so one heatmap costs one pass over a
// single interval's events.
class RegionalUsageIndex {
 public:
  RegionalUsageIndex() = default;
  RegionalUsageIndex(std::span<const ingest::TripRecord> trips, CivilTime t0, int interval_hours,
                     std::size_t intervals);

  CivilTime t0() const { return t0_; }
  int interval_hours() const { return interval_hours_; }
  std::size_t intervals() const { return starts_.size(); }
  CivilTime interval_start(std::size_t t) const {
    return t0_.plus_hours(static_cast<std::int64_t>(t) * interval_hours_);
  }
  // Interval index of `time`, nullopt outside the indexed span or unaligned.
  std::optional<std::size_t> slot_of(CivilTime time) const;

  RegionalGrids aggregate(const GridSpec& grid, const LatLon& center, std::size_t t) const;

 private:
  CivilTime t0_;
  int interval_hours_ = 1;
  std::vector<std::vector<LatLon>> starts_;
  std::vector<std::vector<LatLon>> ends_;
};

// Static per-category counts: result[ch * cells + cell], ch in [0, poi_channels).
std::vector<double> aggregate_pois(const ingest::PoiCatalog& catalog, const GridSpec& grid, const LatLon& center,
                                   std::size_t poi_channels);

// out(r, c, ch) = raw(r, c, ch) - raw(center, center, ch).
Heatmap normalize_heatmap(const Heatmap& raw);

// Builds raw and normalized station-centered heatmaps. POI grids are cached
// per station key; the cache is safe for concurrent readers.
class HeatmapBuilder {
 public:
  HeatmapBuilder(GridSpec grid, std::size_t poi_channels, std::shared_ptr<const RegionalUsageIndex> usage,
                 std::shared_ptr<const ingest::PoiCatalog> pois);

  const GridSpec& grid() const { return grid_; }
  int channels() const { return static_cast<int>(2 + poi_channels_); }
  const RegionalUsageIndex& usage_index() const { return *usage_; }

  Heatmap raw(const std::string& key, const LatLon& center, std::size_t t) const;
  Heatmap normalized(const std::string& key, const LatLon& center, std::size_t t) const;

  // One normalized heatmap per interval in [first, first + count); throws
  // SpanError when the range leaves the indexed data.
  std::vector<Heatmap> series(const std::string& key, const LatLon& center, std::size_t first,
                              std::size_t count) const;
  std::vector<Heatmap> series(const std::string& key, const LatLon& center, const TimeSpan& span) const;

  std::size_t cached_poi_grids() const;

 private:
  std::shared_ptr<const std::vector<double>> poi_grids(const std::string& key, const LatLon& center) const;

  GridSpec grid_;
  std::size_t poi_channels_;
  std::shared_ptr<const RegionalUsageIndex> usage_;
  std::shared_ptr<const ingest::PoiCatalog> pois_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const std::vector<double>>> poi_cache_;
};

}  // namespace atcor::grid
