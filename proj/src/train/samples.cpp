#include "atcor/train/samples.hpp"

#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/model/checkpoint.hpp"

namespace atcor::train {

std::size_t SeriesStore::index_of(const std::string& station) const {
  for (std::size_t i = 0; i < stations.size(); ++i)
    if (stations[i].station == station) return i;
  throw Error("station " + station + " not in the series store");
}

std::vector<Sample> make_samples(const SeriesStore& store, std::span<const std::size_t> stations, std::size_t first,
                                 std::size_t last, int lookback) {
  const auto T = static_cast<std::size_t>(lookback);
  last = std::min(last, store.intervals());
  std::vector<Sample> out;
  for (std::size_t si : stations) {
    const auto& st = store.stations.at(si);
    if (last <= first || last - first < T + 1) {
      log::warn("station " + st.station + ": " + std::to_string(last > first ? last - first : 0) +
                " intervals in range, need " + std::to_string(T + 1) + "; excluded");
      continue;
    }
    // run = number of consecutive present intervals ending at i
    std::size_t run = 0;
    for (std::size_t i = first; i < last; ++i) {
      run = st.present.empty() || st.present[i] ? run + 1 : 0;
      if (run >= T + 1)
        out.push_back(Sample{static_cast<std::uint32_t>(si), static_cast<std::uint32_t>(i - T)});
    }
  }
  return out;
}

model::InputWindow window_of(const SeriesStore& store, const Sample& s, int lookback) {
  const auto T = static_cast<std::size_t>(lookback);
  const auto& st = store.stations[s.station];
  model::InputWindow w;
  if (store.heatmap_size > 0 && !st.heatmaps.empty())
    w.heatmaps = std::span<const double>(st.heatmaps.data() + s.start * store.heatmap_size, T * store.heatmap_size);
  w.usage = std::span<const model::Usage>(st.usage.data() + s.start, T);
  w.externals = std::span<const ingest::ExternalVector>(store.externals.data() + s.start, T + 1);
  return w;
}

model::Usage target_of(const SeriesStore& store, const Sample& s, int lookback) {
  return store.stations[s.station].usage[s.start + static_cast<std::size_t>(lookback)];
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_by_target(std::span<const Sample> samples,
                                                                    std::size_t boundary, int lookback) {
  std::pair<std::vector<Sample>, std::vector<Sample>> out;
  for (const auto& s : samples)
    (s.start + static_cast<std::size_t>(lookback) < boundary ? out.first : out.second).push_back(s);
  return out;
}

std::uint64_t sample_set_hash(const SeriesStore& store, std::span<const Sample> samples) {
  std::string buf;
  for (const auto& s : samples) {
    buf += store.stations[s.station].station;
    buf += '@';
    buf += std::to_string(s.start);
    buf += ';';
  }
  return model::fnv1a64(buf);
}

}  // namespace atcor::train
