#include "atcor/pipeline/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include "atcor/coldstart/coldstart.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/ingest/usage.hpp"
#include "atcor/model/checkpoint.hpp"

namespace atcor::pipeline {

namespace {

std::string flat(std::string s) {
  for (auto& c : s)
    if (c == '\n') c = ';';
  return s;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool uses_heatmaps(std::span<const std::string> schemes) {
  return std::find(schemes.begin(), schemes.end(), "atcor") != schemes.end();
}

evaluate::EvalReport blank(const EvalContext& ctx, const std::string& scheme, const std::string& protocol) {
  evaluate::EvalReport r;
  r.scheme = scheme;
  r.city = ctx.data.city.id;
  r.protocol = protocol;
  r.metadata = ctx.experiment.protocol.metadata();
  return r;
}

// Scores `samples` of one store; inputs[i] holds the raw usage of store
// station i.
void score(const model::Forecaster& m, const train::SeriesStore& store, std::span<const train::Sample> samples,
           std::span<const StationInput> inputs, int cluster, evaluate::EvalReport& rep) {
  const int T = m.lookback();
  auto ws = m.workspace();
  std::vector<evaluate::StationMetrics> per(store.stations.size());
  std::vector<evaluate::PredictionTrace> traces(store.stations.size());
  for (std::size_t i = 0; i < per.size(); ++i) {
    per[i].station = store.stations[i].station;
    per[i].cluster = cluster;
    traces[i].station = store.stations[i].station;
    traces[i].interval_hours = store.interval_hours;
  }
  for (const auto& s : samples) {
    const auto y = m.forward(train::window_of(store, s, T), *ws, nullptr);
    const auto& st = store.stations[s.station];
    const std::size_t target = s.start + static_cast<std::size_t>(T);
    const auto& truth = inputs[s.station].usage[target];
    const double p = std::max(0.0, y[0] * st.scale[0]);
    const double d = std::max(0.0, y[1] * st.scale[1]);
    per[s.station].pickups.add(truth[0], p);
    per[s.station].dropoffs.add(truth[1], d);
    auto& tr = traces[s.station];
    if (tr.truth_pickups.empty()) tr.t0 = store.t0.plus_hours(static_cast<std::int64_t>(target) * store.interval_hours);
    tr.truth_pickups.push_back(truth[0]);
    tr.truth_dropoffs.push_back(truth[1]);
    tr.pred_pickups.push_back(p);
    tr.pred_dropoffs.push_back(d);
  }
  for (std::size_t i = 0; i < per.size(); ++i) {
    if (per[i].pickups.n == 0) continue;
    rep.pickups += per[i].pickups;
    rep.dropoffs += per[i].dropoffs;
    rep.stations.push_back(std::move(per[i]));
    rep.traces.push_back(std::move(traces[i]));
  }
}

}  // namespace

std::vector<evaluate::EvalReport> eval_existing(const EvalContext& ctx, std::span<const std::string> schemes) {
  const auto& p = ctx.experiment.protocol;
  const TimeSpan span{p.test.begin.plus_hours(-static_cast<std::int64_t>(p.lookback) * p.interval_hours), p.test.end};
  std::vector<evaluate::EvalReport> reports;
  for (const auto& s : schemes) reports.push_back(blank(ctx, s, "existing"));
  std::string hash_text;
  for (int c = 0; c < ctx.study.assignment.k(); ++c) {
    const auto members = ctx.study.existing_in(c);
    if (members.empty()) continue;
    const auto inputs = observed_inputs(ctx.data, ctx.study.registry, members, span, ctx.scales);
    const auto store = build_store(ctx.data, uses_heatmaps(schemes) ? &ctx.features : nullptr, inputs, span);
    std::vector<std::size_t> idx(store.stations.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto samples = train::make_samples(store, idx, 0, store.intervals(), p.lookback);
    const auto h = train::sample_set_hash(store, samples);
    hash_text += "cluster" + std::to_string(c) + ":" + hex(h) + ";";
    for (std::size_t k = 0; k < schemes.size(); ++k) {
      const auto& m = ctx.models.get(c, schemes[k]);
      if (m.lookback() != p.lookback)
        throw ConfigError(schemes[k] + " model of cluster " + std::to_string(c) + " has lookback " +
                          std::to_string(m.lookback()) + ", protocol uses " + std::to_string(p.lookback));
      score(m, store, samples, inputs, c, reports[k]);
      reports[k].metadata["sample_hash.cluster_" + std::to_string(c)] = hex(h);
      reports[k].metadata["fingerprint.cluster_" + std::to_string(c)] = flat(m.fingerprint());
    }
  }
  for (auto& r : reports) {
    r.metadata["sample_hash"] = hex(model::fnv1a64(hash_text));
    r.metadata["targets"] = "test span";
  }
  return reports;
}

std::vector<evaluate::EvalReport> eval_new(const EvalContext& ctx, std::span<const std::string> schemes,
                                           bool virtual_history, std::size_t max_targets) {
  const auto& p = ctx.experiment.protocol;
  const std::size_t T = static_cast<std::size_t>(p.lookback);
  const std::size_t W = max_targets == 0 ? p.new_window_intervals() : std::min(max_targets, p.new_window_intervals());
  const int h = ctx.data.interval_hours();
  const std::string protocol =
      max_targets == 0 ? "new" : (virtual_history ? "ablation_with_virtual" : "ablation_without_virtual");
  std::vector<evaluate::EvalReport> reports;
  for (const auto& s : schemes) reports.push_back(blank(ctx, s, protocol));
  if (ctx.study.fresh.empty()) log::warn("no qualifying new stations; the new-station report is empty");

  std::string hash_text;
  for (const auto& n : ctx.study.fresh) {
    const int c = ctx.study.cluster_of(n.station);
    const auto sites = coldstart::select_neighbors(n.coord, ctx.study.registry, ctx.experiment.neighbors, n.station);
    if (sites.empty()) {
      log::warn("new station " + n.station + " skipped: no active existing station within " +
                std::to_string(ctx.experiment.neighbors.radius_km) + " km");
      continue;
    }
    const CivilTime tf = n.first_usage;
    const TimeSpan span{tf.plus_hours(-static_cast<std::int64_t>(T) * h),
                        tf.plus_hours(static_cast<std::int64_t>(W) * h)};
    if (span.begin < ctx.data.span().begin || ctx.data.span().end < span.end) {
      log::warn("new station " + n.station + " skipped: window not covered by the data");
      continue;
    }
    auto weights = coldstart::neighbor_weights(n.station, n.coord, sites);

    StationInput in;
    in.station = n.station;
    in.coord = n.coord;
    const std::vector<std::string> self{n.station};
    in.usage = observed_usage(ctx.data, self, span).at(n.station);
    std::fill(in.usage.begin(), in.usage.begin() + static_cast<std::ptrdiff_t>(T), model::Usage{0.0, 0.0});
    if (virtual_history && p.virtual_intervals > 0) {
      const auto V = static_cast<std::size_t>(p.virtual_intervals);
      const auto vspan = coldstart::virtual_span(tf, p.virtual_intervals, h);
      std::vector<std::string> ids;
      for (const auto& s : sites) ids.push_back(s.station);
      const auto series = ingest::bin_usage_all(ctx.data.trips, ids, h, vspan);
      const auto v = coldstart::virtual_usage(weights, series, vspan, h);
      weights = v.weights;
      // The last min(V, T) virtual intervals fill the inputs just before tf.
      const std::size_t used = std::min(V, T);
      for (std::size_t k = 0; k < used; ++k)
        in.usage[T - used + k] = {v.pickups[V - used + k], v.dropoffs[V - used + k]};
    }
    model::Usage scale{0.0, 0.0};
    for (const auto& nb : weights.neighbors) {
      auto it = ctx.scales.find(nb.station);
      const model::Usage s = it == ctx.scales.end() ? model::Usage{1.0, 1.0} : it->second;
      scale[0] += nb.omega * s[0];
      scale[1] += nb.omega * s[1];
    }
    in.scale = {scale[0] > 0.0 ? scale[0] : 1.0, scale[1] > 0.0 ? scale[1] : 1.0};

    const std::vector<StationInput> inputs{in};
    const auto store = build_store(ctx.data, uses_heatmaps(schemes) ? &ctx.features : nullptr, inputs, span);
    const std::vector<std::size_t> idx{0};
    const auto samples = train::make_samples(store, idx, 0, store.intervals(), p.lookback);
    hash_text += hex(train::sample_set_hash(store, samples)) + ";";
    std::string nb_text;
    for (const auto& nb : weights.neighbors) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ":%.6f,", nb.omega);
      nb_text += nb.station + buf;
    }
    for (std::size_t k = 0; k < schemes.size(); ++k) {
      const auto& m = ctx.models.get(c, schemes[k]);
      score(m, store, samples, inputs, c, reports[k]);
      reports[k].metadata["neighbors." + n.station] = nb_text;
      reports[k].metadata["first_usage." + n.station] = format_civil_time(tf);
      reports[k].metadata["fingerprint.cluster_" + std::to_string(c)] = flat(m.fingerprint());
    }
  }
  for (auto& r : reports) {
    r.metadata["sample_hash"] = hex(model::fnv1a64(hash_text));
    r.metadata["virtual_history"] = virtual_history ? "1" : "0";
    r.metadata["targets_per_station"] = std::to_string(W);
  }
  return reports;
}

Ablation eval_ablation(const EvalContext& ctx, const std::string& scheme) {
  const std::vector<std::string> s{scheme};
  const auto n = static_cast<std::size_t>(ctx.experiment.protocol.ablation_intervals);
  Ablation a;
  a.with_virtual = eval_new(ctx, s, true, n).front();
  a.without_virtual = eval_new(ctx, s, false, n).front();
  return a;
}

}  // namespace atcor::pipeline
