#include "atcor/pipeline/stages.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/ingest/columnar.hpp"
#include "atcor/model/checkpoint.hpp"

namespace atcor::pipeline {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const std::string name = p.filename().string();
  if (name.find_first_of("*?[") == std::string::npos) {
    if (!fs::exists(p)) throw IngestError("trip file " + pattern + " does not exist");
    return {p};
  }
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && fnmatch(name.c_str(), e.path().filename().c_str(), 0) == 0) out.push_back(e.path());
  if (out.empty()) throw IngestError("no trip files match " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

CityData ingest_city(const IngestInputs& in, IngestSummary* summary) {
  CityData d;
  d.city = in.city;
  IngestSummary s;
  if (in.trip_files.empty()) throw IngestError("no trip files given");
  for (const auto& f : in.trip_files) {
    auto r = ingest::parse_trips(f, d.city);
    s.stats += r.stats;
    d.trips.insert(d.trips.end(), std::make_move_iterator(r.trips.begin()), std::make_move_iterator(r.trips.end()));
  }
  if (s.stats.malformed_fraction() > d.city.malformed_threshold) {
    log::warn("trip files: " + std::to_string(s.stats.malformed) + " of " + std::to_string(s.stats.rows) +
              " rows malformed, above the " + num(d.city.malformed_threshold * 100.0) + "% threshold");
  }
  if (d.trips.empty()) throw IngestError("no valid trips in the given files");
  s.relocated = ingest::resolve_station_locations(d.trips, d.city.merge_radius_m);
  std::stable_sort(d.trips.begin(), d.trips.end(),
                   [](const auto& a, const auto& b) { return a.start_time < b.start_time; });

  CivilTime last = d.trips.front().end_time;
  for (const auto& t : d.trips) last = std::max(last, t.end_time);
  const TimeSpan span{CivilTime{day_index(d.trips.front().start_time) * kSecondsPerDay},
                      CivilTime{(day_index(last) + 1) * kSecondsPerDay}};
  const auto weather = ingest::parse_weather(in.weather);
  d.externals = ingest::load_external(weather, d.city, span, d.city.interval_hours);
  d.pois = ingest::parse_pois(in.pois, d.city);
  d.registry = ingest::collect_stations(d.trips);

  s.stations = d.registry.stations.size();
  s.trips = d.trips.size();
  s.span = span;
  if (summary) *summary = s;
  return d;
}

std::string ingest_summary_text(const IngestSummary& s) {
  std::ostringstream o;
  o << "rows=" << s.stats.rows << "\n"
    << "trips=" << s.trips << "\n"
    << "malformed=" << s.stats.malformed << "\n"
    << "malformed.bad_time=" << s.stats.bad_time << "\n"
    << "malformed.reversed_time=" << s.stats.reversed_time << "\n"
    << "malformed.bad_coord=" << s.stats.bad_coord << "\n"
    << "malformed.out_of_bounds=" << s.stats.out_of_bounds << "\n"
    << "malformed.missing_station=" << s.stats.missing_station << "\n"
    << "malformed.over_threshold=" << (s.stats.over_threshold ? 1 : 0) << "\n"
    << "relocated_ids=" << s.relocated << "\n"
    << "stations=" << s.stations << "\n"
    << "span=" << format_civil_time(s.span.begin) << ".." << format_civil_time(s.span.end) << "\n";
  return o.str();
}

int Study::cluster_of(const std::string& station) const {
  auto it = assignment.station_cluster.find(station);
  if (it == assignment.station_cluster.end()) throw Error("station " + station + " is not in any cluster");
  return it->second;
}

std::vector<std::string> Study::existing_in(int c) const {
  std::vector<std::string> out;
  for (const auto& id : existing)
    if (cluster_of(id) == c) out.push_back(id);
  return out;
}

cluster::StationSignature span_signature(const Features& features, const std::string& key, const LatLon& coord,
                                         std::size_t first, std::size_t count, bool raw) {
  if (count == 0) throw Error("signature of an empty heatmap sequence for " + key);
  const auto p = features.channel_names.size();
  std::vector<double> sum(p, 0.0);
  for (std::size_t t = first; t < first + count; ++t) {
    const auto h = raw ? features.builder->raw(key, coord, t) : features.builder->normalized(key, coord, t);
    for (std::size_t i = 0; i < h.values.size(); ++i) sum[i % p] += h.values[i];
  }
  for (auto& v : sum) v /= static_cast<double>(count);
  return {key, sum};
}

Study run_study(const CityData& data, const Features& features, const Experiment& e) {
  Study s;
  s.registry = classify_for_protocol(data, e.protocol);
  s.existing = busiest_existing(data, s.registry, e.protocol.train, e.max_existing);
  if (s.existing.empty()) throw Error("no active existing stations over the training span");
  auto sel = qualify_new_stations(data, s.registry, e.protocol);
  s.fresh = std::move(sel.qualified);
  s.excluded = std::move(sel.excluded);
  log::info("study: " + std::to_string(s.existing.size()) + " existing, " + std::to_string(s.fresh.size()) +
            " new stations");

  const auto [first, count] = data.slots(e.protocol.train);
  for (const auto& id : s.existing)
    s.signatures.push_back(span_signature(features, id, s.registry.stations.at(id).coord, first, count,
                                          e.raw_signatures));
  for (const auto& n : s.fresh)
    s.signatures.push_back(span_signature(features, n.station, n.coord, first, count, e.raw_signatures));

  int k = e.k;
  if (k == 0) {
    const auto elbow = cluster::choose_k(s.signatures, e.k_max, e.cluster_seed);
    k = elbow.k;
    s.wcss_by_k = elbow.wcss_by_k;
    log::info("elbow picked K = " + std::to_string(k));
  }
  s.assignment = cluster::kmeans(s.signatures, k, e.cluster_seed).assignment;
  cluster::check_new_station_coverage(s.assignment, s.registry);
  return s;
}

void write_study(const ArtifactPaths& paths, const Study& s, std::span<const std::string> channel_names) {
  ingest::write_stations(paths.stations(), s.registry);
  cluster::write_clusters(paths.clusters(), paths.centroids(), s.assignment, channel_names);
  {
    std::ofstream out(paths.signatures());
    if (!out) throw Error("cannot write " + paths.signatures().string());
    out << "station";
    for (const auto& c : channel_names) out << '\t' << c;
    out << '\n';
    for (const auto& sig : s.signatures) {
      out << sig.station;
      for (double v : sig.vector) out << '\t' << num(v);
      out << '\n';
    }
  }
  {
    std::ofstream out(paths.wcss());
    if (!out) throw Error("cannot write " + paths.wcss().string());
    out << "k\twcss\n";
    for (std::size_t i = 0; i < s.wcss_by_k.size(); ++i) out << i + 1 << '\t' << num(s.wcss_by_k[i]) << '\n';
  }
  std::ofstream out(paths.study());
  if (!out) throw Error("cannot write " + paths.study().string());
  out << "station\trole\tcluster\tfirst_usage\tfirst_slot\tdaily_activity\tnote\n";
  for (const auto& id : s.existing) out << id << "\texisting\t" << s.cluster_of(id) << "\t\t\t\t\n";
  for (const auto& n : s.fresh)
    out << n.station << "\tnew\t" << s.cluster_of(n.station) << '\t' << format_civil_time(n.first_usage) << '\t'
        << n.first_slot << '\t' << num(n.daily_activity) << "\t\n";
  for (const auto& [id, why] : s.excluded) out << id << "\texcluded\t\t\t\t\t" << why << '\n';
}

Study read_study(const ArtifactPaths& paths) {
  const std::vector<fs::path> need{paths.stations(), paths.clusters(), paths.centroids(), paths.study(),
                                   paths.signatures()};
  require_files(need);
  Study s;
  s.registry = ingest::read_stations(paths.stations());
  s.assignment = cluster::read_clusters(paths.clusters(), paths.centroids());
  std::ifstream in(paths.study());
  DelimitedReader r(in, '\t');
  std::vector<std::string> row;
  const auto col = [&](const char* n) {
    auto c = r.column(n);
    if (!c) throw Error(paths.study().string() + ": missing column " + n);
    return *c;
  };
  const auto cs = col("station"), cr = col("role"), cf = col("first_usage"), cslot = col("first_slot"),
             ca = col("daily_activity"), cn = col("note");
  while (r.next(row)) {
    row.resize(std::max<std::size_t>(row.size(), 7));
    const auto& role = row[cr];
    if (role == "existing") {
      s.existing.push_back(row[cs]);
    } else if (role == "new") {
      NewStationWindow n;
      n.station = row[cs];
      const auto* info = s.registry.find(n.station);
      if (!info) throw Error("study lists unknown station " + n.station);
      n.coord = info->coord;
      const auto t = parse_civil_time(row[cf]);
      const auto slot = parse_int(row[cslot]);
      const auto act = parse_double(row[ca]);
      if (!t || !slot || !act) throw Error(paths.study().string() + ": bad row for " + n.station);
      n.first_usage = *t;
      n.first_slot = static_cast<std::size_t>(*slot);
      n.daily_activity = *act;
      s.fresh.push_back(n);
    } else {
      s.excluded.emplace_back(row[cs], row[cn]);
    }
  }
  std::ifstream sig_in(paths.signatures());
  DelimitedReader sr(sig_in, '\t');
  while (sr.next(row)) {
    cluster::StationSignature sig{row.at(0), {}};
    for (std::size_t i = 1; i < row.size(); ++i) {
      const auto v = parse_double(row[i]);
      if (!v) throw Error(paths.signatures().string() + ": bad value");
      sig.vector.push_back(*v);
    }
    s.signatures.push_back(std::move(sig));
  }
  return s;
}

std::vector<TrainOutcome> run_train(const ArtifactPaths& paths, const CityData& data, const Features& features,
                                    const Experiment& e, const Study& study, std::span<const int> clusters,
                                    const TrainProgress& progress) {
  const TimeSpan span = e.protocol.train;
  const auto existing_all = study.registry.ids_with(ingest::StationStatus::active_existing);
  std::map<std::string, model::Usage> scales;
  if (e.model.usage_scaling) {
    scales = usage_scales(data, existing_all, span);
  } else {
    for (const auto& id : existing_all) scales[id] = {1.0, 1.0};
  }
  write_scales(paths.scales(), scales);
  {
    std::ofstream out(paths.experiment());
    if (!out) throw Error("cannot write " + paths.experiment().string());
    out << experiment_json(e) << "\n";
  }

  std::vector<int> todo(clusters.begin(), clusters.end());
  if (todo.empty())
    for (int c = 0; c < study.assignment.k(); ++c) todo.push_back(c);
  const bool need_heatmaps = std::find(e.schemes.begin(), e.schemes.end(), "atcor") != e.schemes.end();
  const auto ex_scales = external_scales(data, span);

  std::vector<TrainOutcome> outcomes;
  for (int c : todo) {
    if (c < 0 || c >= study.assignment.k())
      throw ConfigError("cluster " + std::to_string(c) + " does not exist (K = " + std::to_string(study.assignment.k()) +
                        ")");
    const auto members = study.existing_in(c);
    if (members.empty()) throw Error("cluster " + std::to_string(c) + " has no existing stations to train on");
    log::info("cluster " + std::to_string(c) + ": building inputs for " + std::to_string(members.size()) +
              " stations");
    const auto inputs = observed_inputs(data, study.registry, members, span, scales);
    const auto store = build_store(data, need_heatmaps ? &features : nullptr, inputs, span);
    std::vector<std::size_t> idx(store.stations.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto all = train::make_samples(store, idx, 0, store.intervals(), e.protocol.lookback);
    const auto n = store.intervals();
    const auto boundary = n - static_cast<std::size_t>(static_cast<double>(n) * e.train.monitor_fraction);
    const auto [train_s, monitor_s] = train::split_by_target(all, boundary, e.protocol.lookback);
    const auto hm_scales = need_heatmaps ? heatmap_scales(store, features.channel_names.size())
                                         : std::vector<double>(features.channel_names.size(), 1.0);

    for (const auto& scheme : e.schemes) {
      auto m = e.make_model(scheme);
      m->set_input_scales(hm_scales, ex_scales);
      train::TrainConfig cfg = e.train;
      cfg.cluster = c;
      cfg.divergence_checkpoint = paths.model(c, scheme).string() + ".diverged";
      TrainOutcome out;
      out.cluster = c;
      out.scheme = scheme;
      out.train_samples = train_s.size();
      out.monitor_samples = monitor_s.size();
      out.sample_hash = train::sample_set_hash(store, train_s);
      out.fingerprint = m->fingerprint();
      log::info("cluster " + std::to_string(c) + ": training " + scheme + " on " + std::to_string(train_s.size()) +
                " samples");
      if (m->trainable()) {
        out.result = train::train_model(*m, store, train_s, monitor_s, cfg, [&](int epoch, double loss) {
          if (progress) progress(c, scheme, epoch, loss);
        });
      }
      std::map<std::string, std::string> meta{
          {"cluster", std::to_string(c)},
          {"scheme", scheme},
          {"train_span", format_civil_time(span.begin) + ".." + format_civil_time(span.end)},
          {"train_samples", std::to_string(out.train_samples)},
          {"monitor_samples", std::to_string(out.monitor_samples)},
          {"sample_hash", std::to_string(out.sample_hash)},
          {"epochs_run", std::to_string(out.result.epochs_run)},
          {"final_loss", out.result.loss.empty() ? "" : num(out.result.loss.back())},
      };
      std::istringstream lines(cfg.fingerprint());
      for (std::string line; std::getline(lines, line);)
        if (auto eq = line.find('='); eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
      model::save_checkpoint(paths.model(c, scheme), *m, meta);
      train::write_loss_trace(paths.loss_trace(c, scheme), out.result);
      outcomes.push_back(std::move(out));
    }
  }
  return outcomes;
}

ModelBank ModelBank::load(const ArtifactPaths& paths, std::span<const int> clusters,
                          std::span<const std::string> schemes) {
  ModelBank bank;
  std::string missing;
  for (int c : clusters)
    for (const auto& s : schemes) {
      const auto p = paths.model(c, s);
      if (!fs::exists(p)) {
        missing += "\n  cluster " + std::to_string(c) + " scheme " + s + " (" + p.string() + ")";
        continue;
      }
      bank.add(c, s, model::open_checkpoint(p));
    }
  if (!missing.empty()) throw Error("missing checkpoints:" + missing);
  return bank;
}

void ModelBank::add(int cluster, const std::string& scheme, std::unique_ptr<model::Forecaster> m) {
  models_[{cluster, scheme}] = std::shared_ptr<const model::Forecaster>(std::move(m));
}

const model::Forecaster& ModelBank::get(int cluster, const std::string& scheme) const {
  auto it = models_.find({cluster, scheme});
  if (it == models_.end())
    throw Error("no " + scheme + " model for cluster " + std::to_string(cluster));
  return *it->second;
}

bool ModelBank::has(int cluster, const std::string& scheme) const { return models_.count({cluster, scheme}) > 0; }

std::vector<int> ModelBank::clusters() const {
  std::set<int> s;
  for (const auto& [k, m] : models_) s.insert(k.first);
  return {s.begin(), s.end()};
}

}  // namespace atcor::pipeline
