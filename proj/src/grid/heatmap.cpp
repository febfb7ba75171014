#include "atcor/grid/heatmap.hpp"

#include <cmath>
#include <mutex>

#include "atcor/common/error.hpp"

namespace atcor::grid {

void GridSpec::validate() const {
  if (rows < 1 || cols < 1 || rows % 2 == 0 || cols % 2 == 0)
    throw ConfigError("grid dimensions must be odd and >= 1, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  if (!(cell_height_m > 0.0) || !(cell_width_m > 0.0)) throw ConfigError("grid cell sizes must be positive");
}

std::optional<CellIndex> cell_of(const GridSpec& grid, const LatLon& center, const LatLon& p) {
  const auto off = equirect_offset(center, p);
  const double kn = std::floor((off.north_m + grid.cell_height_m / 2.0) / grid.cell_height_m);
  const double ke = std::floor((off.east_m + grid.cell_width_m / 2.0) / grid.cell_width_m);
  const int half_r = grid.rows / 2;
  const int half_c = grid.cols / 2;
  if (kn < -half_r || kn > half_r || ke < -half_c || ke > half_c) return std::nullopt;
  return CellIndex{half_r - static_cast<int>(kn), half_c + static_cast<int>(ke)};
}

RegionalGrids aggregate_regional_usage(std::span<const ingest::TripRecord> trips, const GridSpec& grid,
                                       const LatLon& center, const TimeSpan& interval) {
  RegionalGrids g{std::vector<double>(grid.cells(), 0.0), std::vector<double>(grid.cells(), 0.0)};
  for (const auto& t : trips) {
    if (interval.contains(t.start_time)) {
      if (auto c = cell_of(grid, center, t.start_coord))
        g.pickups[static_cast<std::size_t>(c->row * grid.cols + c->col)] += 1.0;
    }
    if (interval.contains(t.end_time)) {
      if (auto c = cell_of(grid, center, t.end_coord))
        g.dropoffs[static_cast<std::size_t>(c->row * grid.cols + c->col)] += 1.0;
    }
  }
  return g;
}

RegionalUsageIndex::RegionalUsageIndex(std::span<const ingest::TripRecord> trips, CivilTime t0, int interval_hours,
                                       std::size_t intervals)
    : t0_(t0), interval_hours_(interval_hours), starts_(intervals), ends_(intervals) {
  const std::int64_t len = interval_hours * kSecondsPerHour;
  const std::int64_t end = t0.seconds + static_cast<std::int64_t>(intervals) * len;
  for (const auto& t : trips) {
    if (t.start_time.seconds >= t0.seconds && t.start_time.seconds < end)
      starts_[static_cast<std::size_t>((t.start_time.seconds - t0.seconds) / len)].push_back(t.start_coord);
    if (t.end_time.seconds >= t0.seconds && t.end_time.seconds < end)
      ends_[static_cast<std::size_t>((t.end_time.seconds - t0.seconds) / len)].push_back(t.end_coord);
  }
}

std::optional<std::size_t> RegionalUsageIndex::slot_of(CivilTime time) const {
  const std::int64_t len = interval_hours_ * kSecondsPerHour;
  const std::int64_t d = time.seconds - t0_.seconds;
  if (d < 0 || d % len != 0) return std::nullopt;
  const auto slot = static_cast<std::size_t>(d / len);
  if (slot >= intervals()) return std::nullopt;
  return slot;
}

RegionalGrids RegionalUsageIndex::aggregate(const GridSpec& grid, const LatLon& center, std::size_t t) const {
  RegionalGrids g{std::vector<double>(grid.cells(), 0.0), std::vector<double>(grid.cells(), 0.0)};
  if (t >= intervals()) throw SpanError("interval index " + std::to_string(t) + " outside ingested data");
  for (const auto& p : starts_[t])
    if (auto c = cell_of(grid, center, p)) g.pickups[static_cast<std::size_t>(c->row * grid.cols + c->col)] += 1.0;
  for (const auto& p : ends_[t])
    if (auto c = cell_of(grid, center, p)) g.dropoffs[static_cast<std::size_t>(c->row * grid.cols + c->col)] += 1.0;
  return g;
}

std::vector<double> aggregate_pois(const ingest::PoiCatalog& catalog, const GridSpec& grid, const LatLon& center,
                                   std::size_t poi_channels) {
  const std::size_t cells = grid.cells();
  std::vector<double> out(poi_channels * cells, 0.0);
  for (const auto& p : catalog.pois) {
    if (p.channel >= poi_channels) continue;
    if (auto c = cell_of(grid, center, p.coord))
      out[p.channel * cells + static_cast<std::size_t>(c->row * grid.cols + c->col)] += 1.0;
  }
  return out;
}

Heatmap normalize_heatmap(const Heatmap& raw) {
  Heatmap out = raw;
  const int cr = raw.rows / 2;
  const int cc = raw.cols / 2;
  for (int ch = 0; ch < raw.channels; ++ch) {
    const double center = raw.at(cr, cc, ch);
    for (int r = 0; r < raw.rows; ++r)
      for (int c = 0; c < raw.cols; ++c) out.at(r, c, ch) = raw.at(r, c, ch) - center;
  }
  return out;
}

HeatmapBuilder::HeatmapBuilder(GridSpec grid, std::size_t poi_channels,
                               std::shared_ptr<const RegionalUsageIndex> usage,
                               std::shared_ptr<const ingest::PoiCatalog> pois)
    : grid_(grid), poi_channels_(poi_channels), usage_(std::move(usage)), pois_(std::move(pois)) {
  grid_.validate();
  if (!usage_ || !pois_) throw ConfigError("heatmap builder needs a usage index and a POI catalog");
}

std::shared_ptr<const std::vector<double>> HeatmapBuilder::poi_grids(const std::string& key,
                                                                     const LatLon& center) const {
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = poi_cache_.find(key); it != poi_cache_.end()) return it->second;
  }
  auto grids = std::make_shared<const std::vector<double>>(aggregate_pois(*pois_, grid_, center, poi_channels_));
  std::unique_lock lock(cache_mutex_);
  auto [it, inserted] = poi_cache_.emplace(key, std::move(grids));
  return it->second;
}

std::size_t HeatmapBuilder::cached_poi_grids() const {
  std::shared_lock lock(cache_mutex_);
  return poi_cache_.size();
}

Heatmap HeatmapBuilder::raw(const std::string& key, const LatLon& center, std::size_t t) const {
  Heatmap h(grid_.rows, grid_.cols, channels());
  h.station = key;
  h.time = usage_->interval_start(t);
  const auto usage = usage_->aggregate(grid_, center, t);
  const auto pois = poi_grids(key, center);
  const std::size_t cells = grid_.cells();
  const auto p = static_cast<std::size_t>(channels());
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double* v = h.values.data() + cell * p;
    v[0] = usage.pickups[cell];
    v[1] = usage.dropoffs[cell];
    for (std::size_t ch = 0; ch < poi_channels_; ++ch) v[2 + ch] = (*pois)[ch * cells + cell];
  }
  return h;
}

Heatmap HeatmapBuilder::normalized(const std::string& key, const LatLon& center, std::size_t t) const {
  return normalize_heatmap(raw(key, center, t));
}

std::vector<Heatmap> HeatmapBuilder::series(const std::string& key, const LatLon& center, std::size_t first,
                                            std::size_t count) const {
  if (first + count > usage_->intervals())
    throw SpanError("heatmap span [" + std::to_string(first) + ", " + std::to_string(first + count) +
                    ") outside ingested data of " + std::to_string(usage_->intervals()) + " intervals");
  std::vector<Heatmap> out;
  out.reserve(count);
  for (std::size_t t = first; t < first + count; ++t) out.push_back(normalized(key, center, t));
  return out;
}

std::vector<Heatmap> HeatmapBuilder::series(const std::string& key, const LatLon& center,
                                            const TimeSpan& span) const {
  const auto a = usage_->slot_of(span.begin);
  const std::int64_t len = usage_->interval_hours() * kSecondsPerHour;
  if (!a || span.seconds() % len != 0)
    throw SpanError("heatmap span " + format_civil_time(span.begin) + " .. " + format_civil_time(span.end) +
                    " outside ingested data or not interval-aligned");
  return series(key, center, *a, static_cast<std::size_t>(span.seconds() / len));
}

}  // namespace atcor::grid
