#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "atcor/grid/heatmap.hpp"

namespace atcor::grid {

// Binary heatmap file (little-endian):
//   magic "ATCORHM1" | u32 rows | u32 cols | u32 channels
//   | channels x (u32 len, name bytes) | u64 count
//   | count x (u32 len, station bytes, i64 interval start seconds,
//              rows*cols*channels f64, row-major with channel fastest)
struct HeatmapFile {
  std::vector<std::string> channel_names;
  std::vector<Heatmap> heatmaps;
};

void write_heatmaps(const std::filesystem::path& path, const HeatmapFile& file);
HeatmapFile read_heatmaps(const std::filesystem::path& path);

// Human-readable dump: one block per heatmap and channel.
void dump_heatmaps_text(std::ostream& out, const HeatmapFile& file);

std::vector<std::string> heatmap_channel_names(std::span<const std::string> poi_categories);

}  // namespace atcor::grid
