#include "atcor/grid/heatmap_io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "atcor/common/error.hpp"

namespace atcor::grid {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'C', 'O', 'R', 'H', 'M', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in, const std::string& name) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(name + ": truncated heatmap file");
  return v;
}

std::string get_string(std::istream& in, const std::string& name) {
  const auto n = get<std::uint32_t>(in, name);
  if (n > (1u << 20)) throw Error(name + ": implausible string length in heatmap file");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error(name + ": truncated heatmap file");
  return s;
}

}  // namespace

std::vector<std::string> heatmap_channel_names(std::span<const std::string> poi_categories) {
  std::vector<std::string> names{"regional_pickups", "regional_dropoffs"};
  for (const auto& c : poi_categories) names.push_back("poi:" + c);
  return names;
}

void write_heatmaps(const std::filesystem::path& path, const HeatmapFile& file) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const Heatmap* first = file.heatmaps.empty() ? nullptr : &file.heatmaps.front();
  const auto rows = static_cast<std::uint32_t>(first ? first->rows : 0);
  const auto cols = static_cast<std::uint32_t>(first ? first->cols : 0);
  const auto channels = static_cast<std::uint32_t>(file.channel_names.size());
  out.write(kMagic, sizeof kMagic);
  put(out, rows);
  put(out, cols);
  put(out, channels);
  for (const auto& n : file.channel_names) put_string(out, n);
  put<std::uint64_t>(out, file.heatmaps.size());
  for (const auto& h : file.heatmaps) {
    if (static_cast<std::uint32_t>(h.rows) != rows || static_cast<std::uint32_t>(h.cols) != cols ||
        static_cast<std::uint32_t>(h.channels) != channels)
      throw ShapeError("heatmap file entries must share one shape");
    put_string(out, h.station);
    put<std::int64_t>(out, h.time.seconds);
    out.write(reinterpret_cast<const char*>(h.values.data()),
              static_cast<std::streamsize>(h.values.size() * sizeof(double)));
  }
  if (!out) throw Error("write failed for " + path.string());
}

HeatmapFile read_heatmaps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string name = path.string();
  if (!in) throw Error("cannot read " + name);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error(name + ": not a heatmap file");
  const auto rows = get<std::uint32_t>(in, name);
  const auto cols = get<std::uint32_t>(in, name);
  const auto channels = get<std::uint32_t>(in, name);
  HeatmapFile file;
  for (std::uint32_t i = 0; i < channels; ++i) file.channel_names.push_back(get_string(in, name));
  const auto count = get<std::uint64_t>(in, name);
  for (std::uint64_t i = 0; i < count; ++i) {
    Heatmap h(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(channels));
    h.station = get_string(in, name);
    h.time = CivilTime{get<std::int64_t>(in, name)};
    if (!in.read(reinterpret_cast<char*>(h.values.data()), static_cast<std::streamsize>(h.values.size() * sizeof(double))))
      throw Error(name + ": truncated heatmap file");
    file.heatmaps.push_back(std::move(h));
  }
  return file;
}

void dump_heatmaps_text(std::ostream& out, const HeatmapFile& file) {
  for (const auto& h : file.heatmaps) {
    for (int ch = 0; ch < h.channels; ++ch) {
      out << "# station=" << h.station << " time=" << format_civil_time(h.time) << " channel=" << ch;
      if (static_cast<std::size_t>(ch) < file.channel_names.size()) out << " (" << file.channel_names[ch] << ")";
      out << '\n';
      for (int r = 0; r < h.rows; ++r) {
        for (int c = 0; c < h.cols; ++c) out << (c ? " " : "") << std::setw(7) << h.at(r, c, ch);
        out << '\n';
      }
    }
  }
}

}  // namespace atcor::grid
