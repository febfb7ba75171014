#include "atcor/pipeline/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "atcor/common/error.hpp"
#include "atcor/grid/heatmap_io.hpp"

namespace atcor::pipeline {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

TimeSpan span_of(const json& j, const std::string& where) {
  const auto s = parse_span(j.get<std::string>());
  if (!s) throw ConfigError(where + ": expected \"t0..t1\", got " + j.dump());
  return *s;
}

std::string span_text(const TimeSpan& s) { return format_civil_time(s.begin) + ".." + format_civil_time(s.end); }

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

const std::vector<std::string>& known_schemes() {
  static const std::vector<std::string> s{"atcor", "rnn", "lstm", "gru", "persistence"};
  return s;
}

void Experiment::validate() const {
  protocol.validate();
  grid.validate();
  model.validate();
  baseline.validate();
  train.validate();
  if (model.lookback != protocol.lookback || baseline.lookback != protocol.lookback)
    throw ConfigError("model and protocol lookbacks differ");
  if (schemes.empty()) throw ConfigError("no schemes selected");
  for (const auto& s : schemes)
    if (std::find(known_schemes().begin(), known_schemes().end(), s) == known_schemes().end())
      throw ConfigError("unknown scheme '" + s + "' (known: atcor, rnn, lstm, gru, persistence)");
  if (k < 0 || k_max < 1) throw ConfigError("cluster k must be >= 0 (0 = auto) and k_max >= 1");
  if (neighbors.max_neighbors < 1 || !(neighbors.radius_km > 0.0))
    throw ConfigError("neighbor policy needs max_neighbors >= 1 and radius_km > 0");
}

std::unique_ptr<model::Forecaster> Experiment::make_model(const std::string& scheme) const {
  if (scheme == "atcor") return std::make_unique<model::AtcorNet>(model);
  if (scheme == "persistence") return std::make_unique<model::Persistence>(protocol.lookback);
  model::BaselineConfig b = baseline;
  if (scheme == "rnn") b.kind = model::RecurrentKind::rnn;
  else if (scheme == "lstm") b.kind = model::RecurrentKind::lstm;
  else if (scheme == "gru") b.kind = model::RecurrentKind::gru;
  else throw ConfigError("unknown scheme '" + scheme + "'");
  return std::make_unique<model::RecurrentBaseline>(b);
}

Experiment default_experiment(const ingest::CityConfig& city) {
  Experiment e;
  try {
    e.protocol = evaluate::default_protocol(city.id);
  } catch (const ConfigError&) {
    e.protocol.city = city.id;
    e.protocol.interval_hours = city.interval_hours;
  }
  e.model.channel_names = grid::heatmap_channel_names(city.poi_categories);
  e.model.grid_rows = e.grid.rows;
  e.model.grid_cols = e.grid.cols;
  e.model.lookback = e.protocol.lookback;
  e.baseline.hidden = e.model.hidden;
  e.baseline.lookback = e.protocol.lookback;
  return e;
}

Experiment parse_experiment(const std::string& text, const ingest::CityConfig& city) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("invalid experiment JSON: ") + ex.what());
  }
  Experiment e = default_experiment(city);
  try {
    check_keys(j, "experiment",
               {"seed", "protocol", "grid", "model", "baseline", "train", "schemes", "cluster", "stations", "coldstart"});
    if (j.contains("seed")) {
      const auto s = j["seed"].get<std::uint64_t>();
      e.model.seed = e.baseline.seed = e.train.seed = e.cluster_seed = s;
    }
    if (j.contains("protocol")) {
      const auto& p = j["protocol"];
      check_keys(p, "protocol",
                 {"interval_hours", "lookback", "train", "test", "deploy", "history_days", "new_window_hours",
                  "activity_floor", "first_usage_run", "virtual_intervals", "ablation_intervals"});
      auto& pr = e.protocol;
      take(p, "interval_hours", pr.interval_hours);
      take(p, "lookback", pr.lookback);
      if (p.contains("train")) pr.train = span_of(p["train"], "protocol.train");
      if (p.contains("test")) pr.test = span_of(p["test"], "protocol.test");
      if (p.contains("deploy")) pr.deploy = span_of(p["deploy"], "protocol.deploy");
      take(p, "history_days", pr.history_days);
      take(p, "new_window_hours", pr.new_window_hours);
      take(p, "activity_floor", pr.activity_floor);
      take(p, "first_usage_run", pr.first_usage_run);
      take(p, "virtual_intervals", pr.virtual_intervals);
      take(p, "ablation_intervals", pr.ablation_intervals);
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      check_keys(g, "grid", {"rows", "cols", "cell_height_m", "cell_width_m"});
      take(g, "rows", e.grid.rows);
      take(g, "cols", e.grid.cols);
      take(g, "cell_height_m", e.grid.cell_height_m);
      take(g, "cell_width_m", e.grid.cell_width_m);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m, "model",
                 {"hidden", "layers", "convs", "shared_candidate", "decoder_init", "encoder_externals", "dropout",
                  "heatmap_scaling", "usage_scaling", "zero_readout", "seed"});
      auto& mc = e.model;
      take(m, "hidden", mc.hidden);
      take(m, "layers", mc.layers);
      if (m.contains("convs")) {
        mc.convs.clear();
        for (const auto& c : m["convs"]) {
          if (!c.is_array() || c.size() != 3) throw ConfigError("model.convs entries are [kh, kw, out]");
          mc.convs.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<int>()});
        }
      }
      take(m, "shared_candidate", mc.shared_candidate);
      if (m.contains("decoder_init")) {
        const auto d = m["decoder_init"].get<std::string>();
        if (d == "encoder_final") mc.decoder_init = model::DecoderInit::encoder_final;
        else if (d == "zeros") mc.decoder_init = model::DecoderInit::zeros;
        else throw ConfigError("model.decoder_init must be encoder_final or zeros");
      }
      take(m, "encoder_externals", mc.encoder_externals);
      take(m, "dropout", mc.dropout);
      take(m, "heatmap_scaling", mc.heatmap_scaling);
      take(m, "usage_scaling", mc.usage_scaling);
      take(m, "zero_readout", mc.zero_readout);
      take(m, "seed", mc.seed);
      e.baseline.hidden = mc.hidden;
      e.baseline.dropout = mc.dropout;
    }
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      check_keys(b, "baseline", {"hidden", "dropout", "seed"});
      take(b, "hidden", e.baseline.hidden);
      take(b, "dropout", e.baseline.dropout);
      take(b, "seed", e.baseline.seed);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      check_keys(t, "train",
                 {"learning_rate", "batch_size", "epochs", "optimizer", "clip_norm", "seed", "monitor_fraction",
                  "monitor_every", "early_stop", "finite_check_every", "threads"});
      auto& tc = e.train;
      take(t, "learning_rate", tc.learning_rate);
      take(t, "batch_size", tc.batch_size);
      take(t, "epochs", tc.epochs);
      if (t.contains("optimizer")) {
        const auto o = t["optimizer"].get<std::string>();
        if (o == "adam") tc.optimizer = train::Optimizer::adam;
        else if (o == "sgd") tc.optimizer = train::Optimizer::sgd;
        else throw ConfigError("train.optimizer must be adam or sgd");
      }
      take(t, "clip_norm", tc.clip_norm);
      take(t, "seed", tc.seed);
      take(t, "monitor_fraction", tc.monitor_fraction);
      take(t, "monitor_every", tc.monitor_every);
      take(t, "early_stop", tc.early_stop);
      take(t, "finite_check_every", tc.finite_check_every);
      take(t, "threads", tc.threads);
    }
    if (j.contains("schemes")) e.schemes = j["schemes"].get<std::vector<std::string>>();
    if (j.contains("cluster")) {
      const auto& c = j["cluster"];
      check_keys(c, "cluster", {"k", "k_max", "seed", "raw_signatures"});
      if (c.contains("k")) {
        if (c["k"].is_string()) {
          if (c["k"].get<std::string>() != "auto") throw ConfigError("cluster.k must be a number or \"auto\"");
          e.k = 0;
        } else {
          e.k = c["k"].get<int>();
        }
      }
      take(c, "k_max", e.k_max);
      take(c, "seed", e.cluster_seed);
      take(c, "raw_signatures", e.raw_signatures);
    }
    if (j.contains("stations")) {
      check_keys(j["stations"], "stations", {"max_existing"});
      take(j["stations"], "max_existing", e.max_existing);
    }
    if (j.contains("coldstart")) {
      check_keys(j["coldstart"], "coldstart", {"max_neighbors", "radius_km"});
      take(j["coldstart"], "max_neighbors", e.neighbors.max_neighbors);
      take(j["coldstart"], "radius_km", e.neighbors.radius_km);
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("experiment config: ") + ex.what());
  }
  e.model.grid_rows = e.grid.rows;
  e.model.grid_cols = e.grid.cols;
  e.model.lookback = e.baseline.lookback = e.protocol.lookback;
  e.baseline.usage_scaling = e.model.usage_scaling;
  e.validate();
  return e;
}

Experiment load_experiment(const std::filesystem::path& path, const ingest::CityConfig& city) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read experiment config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), city);
}

std::string experiment_json(const Experiment& e) {
  json j;
  const auto& p = e.protocol;
  j["protocol"] = {{"interval_hours", p.interval_hours},
                   {"lookback", p.lookback},
                   {"train", span_text(p.train)},
                   {"test", span_text(p.test)},
                   {"deploy", span_text(p.deploy)},
                   {"history_days", p.history_days},
                   {"new_window_hours", p.new_window_hours},
                   {"activity_floor", p.activity_floor},
                   {"first_usage_run", p.first_usage_run},
                   {"virtual_intervals", p.virtual_intervals},
                   {"ablation_intervals", p.ablation_intervals}};
  j["grid"] = {{"rows", e.grid.rows},
               {"cols", e.grid.cols},
               {"cell_height_m", e.grid.cell_height_m},
               {"cell_width_m", e.grid.cell_width_m}};
  json convs = json::array();
  for (const auto& c : e.model.convs) convs.push_back({c.kh, c.kw, c.out});
  const auto& m = e.model;
  j["model"] = {{"hidden", m.hidden},
                {"layers", m.layers},
                {"convs", convs},
                {"shared_candidate", m.shared_candidate},
                {"decoder_init", m.decoder_init == model::DecoderInit::zeros ? "zeros" : "encoder_final"},
                {"encoder_externals", m.encoder_externals},
                {"dropout", m.dropout},
                {"heatmap_scaling", m.heatmap_scaling},
                {"usage_scaling", m.usage_scaling},
                {"zero_readout", m.zero_readout},
                {"seed", m.seed}};
  j["baseline"] = {{"hidden", e.baseline.hidden}, {"dropout", e.baseline.dropout}, {"seed", e.baseline.seed}};
  const auto& t = e.train;
  j["train"] = {{"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"optimizer", t.optimizer == train::Optimizer::adam ? "adam" : "sgd"},
                {"clip_norm", t.clip_norm},
                {"seed", t.seed},
                {"monitor_fraction", t.monitor_fraction},
                {"monitor_every", t.monitor_every},
                {"early_stop", t.early_stop},
                {"finite_check_every", t.finite_check_every},
                {"threads", t.threads}};
  j["schemes"] = e.schemes;
  j["cluster"] = {{"k_max", e.k_max}, {"seed", e.cluster_seed}, {"raw_signatures", e.raw_signatures}};
  if (e.k == 0) j["cluster"]["k"] = "auto";
  else j["cluster"]["k"] = e.k;
  j["stations"] = {{"max_existing", e.max_existing}};
  j["coldstart"] = {{"max_neighbors", e.neighbors.max_neighbors}, {"radius_km", e.neighbors.radius_km}};
  return j.dump(2);
}

}  // namespace atcor::pipeline
