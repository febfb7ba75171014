#include "atcor/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/grid/heatmap_io.hpp"
#include "atcor/ingest/columnar.hpp"
#include "atcor/ingest/usage.hpp"

namespace atcor::pipeline {

void require_files(std::span<const fs::path> paths) {
  std::string missing;
  for (const auto& p : paths)
    if (!fs::exists(p)) missing += "\n  " + p.string();
  if (!missing.empty()) throw Error("missing artifact files:" + missing);
}

TimeSpan CityData::span() const {
  return {externals.t0,
          externals.t0.plus_hours(static_cast<std::int64_t>(externals.size()) * externals.interval_hours)};
}

std::size_t CityData::slot(CivilTime t) const {
  const std::int64_t len = static_cast<std::int64_t>(externals.interval_hours) * kSecondsPerHour;
  const std::int64_t d = t.seconds - externals.t0.seconds;
  if (d < 0 || d % len != 0 || static_cast<std::size_t>(d / len) >= externals.size())
    throw SpanError(format_civil_time(t) + " is not an interval start inside the data " +
                    format_civil_time(span().begin) + " .. " + format_civil_time(span().end));
  return static_cast<std::size_t>(d / len);
}

std::pair<std::size_t, std::size_t> CityData::slots(const TimeSpan& s) const {
  const std::size_t n = ingest::interval_count(s, externals.interval_hours);
  if (n == 0) return {0, 0};
  const std::size_t a = slot(s.begin);
  if (a + n > externals.size())
    throw SpanError("span " + format_civil_time(s.begin) + " .. " + format_civil_time(s.end) +
                    " runs past the data, which ends at " + format_civil_time(span().end));
  return {a, n};
}

CityData load_city_data(const ArtifactPaths& paths) {
  const auto files = paths.ingest_outputs();
  require_files(files);
  CityData d;
  d.city = ingest::load_city_config(paths.city());
  d.trips = ingest::read_trips(paths.trips());
  std::stable_sort(d.trips.begin(), d.trips.end(),
                   [](const auto& a, const auto& b) { return a.start_time < b.start_time; });
  d.externals = ingest::read_externals(paths.externals());
  d.pois = ingest::read_pois(paths.pois());
  d.registry = ingest::read_stations(paths.stations());
  if (d.externals.interval_hours != d.city.interval_hours)
    throw ConfigError("externals use " + std::to_string(d.externals.interval_hours) + " h intervals but city " +
                      d.city.id + " uses " + std::to_string(d.city.interval_hours) + " h");
  return d;
}

void save_city_data(const ArtifactPaths& paths, const CityData& data) {
  fs::create_directories(paths.root);
  {
    std::ofstream out(paths.city());
    if (!out) throw Error("cannot write " + paths.city().string());
    out << ingest::city_config_json(data.city) << "\n";
  }
  ingest::write_trips(paths.trips(), data.trips);
  ingest::write_externals(paths.externals(), data.externals);
  ingest::write_pois(paths.pois(), data.pois, data.city);
  ingest::write_stations(paths.stations(), data.registry);
  std::vector<std::string> ids;
  for (const auto& [id, s] : data.registry.stations) ids.push_back(id);
  ingest::write_usage(paths.usage(), ingest::bin_usage_all(data.trips, ids, data.interval_hours(), data.span()));
}

Features make_features(const CityData& data, const grid::GridSpec& grid) {
  grid.validate();
  Features f;
  f.grid = grid;
  f.channel_names = grid::heatmap_channel_names(data.city.poi_categories);
  f.index = std::make_shared<grid::RegionalUsageIndex>(data.trips, data.externals.t0, data.interval_hours(),
                                                       data.externals.size());
  f.builder = std::make_shared<grid::HeatmapBuilder>(grid, data.city.poi_channels(), f.index,
                                                     std::make_shared<ingest::PoiCatalog>(data.pois));
  return f;
}

ingest::StationRegistry classify_for_protocol(const CityData& data, const evaluate::Protocol& protocol) {
  ingest::ClassifyOptions fresh_opts;
  fresh_opts.history_days = protocol.history_days;
  fresh_opts.data_start = data.span().begin;
  auto fresh = ingest::classify_stations(data.trips, protocol.deploy, fresh_opts);
  ingest::ClassifyOptions existing_opts;
  existing_opts.history_days = 0;
  existing_opts.data_start = data.span().begin;
  auto reg = ingest::classify_stations(data.trips, protocol.train, existing_opts);
  for (auto& [id, info] : reg.stations) {
    const auto* f = fresh.find(id);
    if (f && f->status == ingest::StationStatus::new_station) info.status = ingest::StationStatus::new_station;
  }
  log::info("protocol classification: " + std::to_string(reg.count(ingest::StationStatus::active_existing)) +
            " active existing, " + std::to_string(reg.count(ingest::StationStatus::new_station)) + " new");
  return reg;
}

std::vector<std::string> busiest_existing(const CityData& data, const ingest::StationRegistry& registry,
                                          const TimeSpan& span, std::size_t n) {
  std::map<std::string, std::size_t> use;
  for (const auto& [id, s] : registry.stations)
    if (s.status == ingest::StationStatus::active_existing) use[id] = 0;
  for (const auto& t : data.trips) {
    if (span.contains(t.start_time))
      if (auto it = use.find(t.start_station); it != use.end()) ++it->second;
    if (span.contains(t.end_time))
      if (auto it = use.find(t.end_station); it != use.end()) ++it->second;
  }
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& [id, c] : use) ranked.emplace_back(c, id);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<std::string> out;
  for (const auto& [c, id] : ranked) {
    if (n != 0 && out.size() >= n) break;
    out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::vector<model::Usage>> observed_usage(const CityData& data,
                                                                std::span<const std::string> stations,
                                                                const TimeSpan& span) {
  data.slots(span);  // coverage check
  const auto series = ingest::bin_usage_all(data.trips, stations, data.interval_hours(), span);
  std::map<std::string, std::vector<model::Usage>> out;
  for (const auto& id : stations) {
    auto& v = out[id];
    auto it = series.find(id);
    if (it == series.end()) {
      v.assign(ingest::interval_count(span, data.interval_hours()), model::Usage{0.0, 0.0});
      continue;
    }
    v.resize(it->second.size());
    for (std::size_t t = 0; t < v.size(); ++t)
      v[t] = {static_cast<double>(it->second.pickups[t]), static_cast<double>(it->second.dropoffs[t])};
  }
  return out;
}

std::size_t first_usage_index(std::span<const model::Usage> usage, int run) {
  int streak = 0;
  for (std::size_t t = 0; t < usage.size(); ++t) {
    streak = usage[t][0] + usage[t][1] > 0.0 ? streak + 1 : 0;
    if (streak == run) return t + 1 - static_cast<std::size_t>(run);
  }
  return static_cast<std::size_t>(-1);
}

NewStationSelection qualify_new_stations(const CityData& data, const ingest::StationRegistry& registry,
                                         const evaluate::Protocol& protocol) {
  NewStationSelection sel;
  const auto ids = registry.ids_with(ingest::StationStatus::new_station);
  if (ids.empty()) return sel;
  const TimeSpan tail{protocol.deploy.begin, data.span().end};
  const auto usage = observed_usage(data, ids, tail);
  const std::size_t base = data.slot(protocol.deploy.begin);
  const std::size_t w = protocol.new_window_intervals();
  const double days = static_cast<double>(protocol.new_window_hours) / 24.0;
  for (const auto& id : ids) {
    const auto& u = usage.at(id);
    const std::size_t f = first_usage_index(u, protocol.first_usage_run);
    if (f == static_cast<std::size_t>(-1)) {
      sel.excluded.emplace_back(id, "no run of " + std::to_string(protocol.first_usage_run) + " used intervals");
      continue;
    }
    NewStationWindow nw;
    nw.station = id;
    nw.coord = registry.stations.at(id).coord;
    nw.first_slot = base + f;
    nw.first_usage = data.externals.t0.plus_hours(static_cast<std::int64_t>(nw.first_slot) * data.interval_hours());
    if (!protocol.deploy.contains(nw.first_usage)) {
      sel.excluded.emplace_back(id, "first usage " + format_civil_time(nw.first_usage) + " after the deploy window");
      continue;
    }
    if (f + w > u.size() || nw.first_slot < static_cast<std::size_t>(protocol.lookback)) {
      sel.excluded.emplace_back(id, "evaluation window from " + format_civil_time(nw.first_usage) +
                                        " not covered by the data");
      continue;
    }
    double total = 0.0;
    for (std::size_t t = f; t < f + w; ++t) total += u[t][0] + u[t][1];
    nw.daily_activity = total / days;
    if (nw.daily_activity < protocol.activity_floor) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.2f uses per day is below the floor of %g", nw.daily_activity,
                    protocol.activity_floor);
      sel.excluded.emplace_back(id, buf);
      continue;
    }
    sel.qualified.push_back(nw);
  }
  for (const auto& [id, why] : sel.excluded) log::info("new station " + id + " excluded: " + why);
  return sel;
}

std::map<std::string, model::Usage> usage_scales(const CityData& data, std::span<const std::string> stations,
                                                 const TimeSpan& span) {
  std::map<std::string, model::Usage> out;
  for (const auto& [id, u] : observed_usage(data, stations, span)) {
    model::Usage m{0.0, 0.0};
    for (const auto& x : u) m = {std::max(m[0], x[0]), std::max(m[1], x[1])};
    out[id] = {m[0] > 0.0 ? m[0] : 1.0, m[1] > 0.0 ? m[1] : 1.0};
  }
  return out;
}

void write_scales(const fs::path& path, const std::map<std::string, model::Usage>& scales) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "station\tpickup_scale\tdropoff_scale\n";
  char buf[80];
  for (const auto& [id, s] : scales) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g", s[0], s[1]);
    out << id << '\t' << buf << '\n';
  }
}

std::map<std::string, model::Usage> read_scales(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  DelimitedReader r(in, '\t');
  const auto cs = r.column("station"), cp = r.column("pickup_scale"), cd = r.column("dropoff_scale");
  if (!cs || !cp || !cd) throw Error(path.string() + ": missing columns");
  std::map<std::string, model::Usage> out;
  std::vector<std::string> row;
  while (r.next(row)) {
    const auto p = parse_double(row.at(*cp)), d = parse_double(row.at(*cd));
    if (!p || !d) throw Error(path.string() + ":" + std::to_string(r.line_number()) + ": bad scale");
    out[row.at(*cs)] = {*p, *d};
  }
  return out;
}

std::vector<double> external_scales(const CityData& data, const TimeSpan& span) {
  const auto [a, n] = data.slots(span);
  std::vector<double> s(ingest::kExternalDim, 0.0);
  for (std::size_t t = a; t < a + n; ++t)
    for (std::size_t k = 0; k < ingest::kExternalDim; ++k)
      s[k] = std::max(s[k], std::fabs(data.externals.values[t][k]));
  return s;
}

std::vector<double> heatmap_scales(const train::SeriesStore& store, std::size_t channels) {
  std::vector<double> s(channels, 0.0);
  for (const auto& st : store.stations)
    for (std::size_t i = 0; i < st.heatmaps.size(); ++i)
      s[i % channels] = std::max(s[i % channels], std::fabs(st.heatmaps[i]));
  return s;
}

train::SeriesStore build_store(const CityData& data, const Features* features, std::span<const StationInput> stations,
                               const TimeSpan& span) {
  const auto [a, n] = data.slots(span);
  train::SeriesStore store;
  store.t0 = span.begin;
  store.interval_hours = data.interval_hours();
  store.heatmap_size = features ? features->heatmap_size() : 0;
  store.externals.assign(data.externals.values.begin() + static_cast<std::ptrdiff_t>(a),
                         data.externals.values.begin() + static_cast<std::ptrdiff_t>(a + n));
  for (const auto& in : stations) {
    if (in.usage.size() != n)
      throw ShapeError("station " + in.station + " has " + std::to_string(in.usage.size()) +
                       " usage intervals, store span has " + std::to_string(n));
    train::StationFrames f;
    f.station = in.station;
    f.scale = in.scale;
    f.usage.resize(n);
    for (std::size_t t = 0; t < n; ++t) f.usage[t] = {in.usage[t][0] / in.scale[0], in.usage[t][1] / in.scale[1]};
    f.present.assign(n, 1);
    if (features) {
      f.heatmaps.resize(n * store.heatmap_size);
      for (std::size_t t = 0; t < n; ++t) {
        const auto h = features->builder->normalized(in.station, in.coord, a + t);
        std::copy(h.values.begin(), h.values.end(),
                  f.heatmaps.begin() + static_cast<std::ptrdiff_t>(t * store.heatmap_size));
      }
    }
    store.stations.push_back(std::move(f));
  }
  return store;
}

std::vector<StationInput> observed_inputs(const CityData& data, const ingest::StationRegistry& registry,
                                          std::span<const std::string> stations, const TimeSpan& span,
                                          const std::map<std::string, model::Usage>& scales) {
  auto usage = observed_usage(data, stations, span);
  std::vector<StationInput> out;
  for (const auto& id : stations) {
    const auto* info = registry.find(id);
    if (!info) throw Error("station " + id + " is not in the registry");
    StationInput in;
    in.station = id;
    in.coord = info->coord;
    in.usage = std::move(usage.at(id));
    if (auto it = scales.find(id); it != scales.end()) in.scale = it->second;
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace atcor::pipeline
