#include "atcor/service/service.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "atcor/coldstart/coldstart.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/ingest/usage.hpp"
#include "atcor/model/checkpoint.hpp"

namespace atcor::service {

namespace {

using nlohmann::json;

Response reply(int status, const json& j) { return {status, j.dump()}; }

Response fail(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return reply(status, extra);
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string coord_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json span_json(const TimeSpan& s) {
  return {{"begin", format_civil_time(s.begin)}, {"end", format_civil_time(s.end)}};
}

bool covers(const TimeSpan& outer, const TimeSpan& inner) {
  return outer.begin <= inner.begin && inner.end <= outer.end;
}

bool aligned(const pipeline::CityData& d, CivilTime t) {
  return (t.seconds - d.span().begin.seconds) % (static_cast<std::int64_t>(d.interval_hours()) * kSecondsPerHour) == 0;
}

json neighbors_json(const coldstart::NeighborWeights& w) {
  json a = json::array();
  for (const auto& n : w.neighbors)
    a.push_back({{"station", n.station},
                 {"lat", n.coord.lat},
                 {"lon", n.coord.lon},
                 {"distance_km", n.distance_km},
                 {"sim", n.sim},
                 {"omega", n.omega}});
  return a;
}

// ω-weighted mean of the neighbours' usage scales.
model::Usage blended_scale(const coldstart::NeighborWeights& w, const std::map<std::string, model::Usage>& scales) {
  model::Usage s{0.0, 0.0};
  for (const auto& nb : w.neighbors) {
    auto it = scales.find(nb.station);
    const model::Usage v = it == scales.end() ? model::Usage{1.0, 1.0} : it->second;
    s[0] += nb.omega * v[0];
    s[1] += nb.omega * v[1];
  }
  return {s[0] > 0.0 ? s[0] : 1.0, s[1] > 0.0 ? s[1] : 1.0};
}

}  // namespace

std::vector<std::filesystem::path> required_artifacts(const pipeline::ArtifactPaths& paths) {
  auto need = paths.ingest_outputs();
  for (const auto& p : {paths.experiment(), paths.clusters(), paths.centroids(), paths.study(), paths.signatures(),
                        paths.scales()})
    need.push_back(p);
  return need;
}

std::shared_ptr<const ServiceState> load_state(const std::filesystem::path& artifacts, const std::string& scheme) {
  const pipeline::ArtifactPaths paths(artifacts);
  pipeline::require_files(required_artifacts(paths));
  auto st = std::make_shared<ServiceState>();
  st->data = pipeline::load_city_data(paths);
  st->experiment = pipeline::load_experiment(paths.experiment(), st->data.city);
  st->study = pipeline::read_study(paths);
  st->scales = pipeline::read_scales(paths.scales());
  st->features = pipeline::make_features(st->data, st->experiment.grid);
  st->channel_names = st->features.channel_names;
  std::vector<int> clusters;
  for (int c = 0; c < st->study.assignment.k(); ++c)
    if (!st->study.existing_in(c).empty()) clusters.push_back(c);
  const std::vector<std::string> schemes{scheme};
  st->models = pipeline::ModelBank::load(paths, clusters, schemes);
  return st;
}

Service::Service(const ServiceOptions& options) : Service(options, load_state(options.artifacts, options.scheme)) {}

Service::Service(ServiceOptions options, std::shared_ptr<const ServiceState> state)
    : options_(std::move(options)), state_(std::move(state)) {
  if (!options_.city.empty() && options_.city != state_->data.city.id)
    throw ConfigError("artifacts hold city '" + state_->data.city.id + "', service configured for '" + options_.city +
                      "'");
}

Response Service::health() const {
  const auto& s = *state_;
  json models = json::array();
  for (int c : s.models.clusters())
    if (s.models.has(c, options_.scheme))
      models.push_back({{"cluster", c},
                        {"scheme", options_.scheme},
                        {"fingerprint_hash", hex(model::fnv1a64(s.models.get(c, options_.scheme).fingerprint()))}});
  return reply(200, {{"status", "ok"},
                     {"city", s.data.city.id},
                     {"scheme", options_.scheme},
                     {"interval_hours", s.data.interval_hours()},
                     {"data_span", span_json(s.data.span())},
                     {"stations", s.study.registry.stations.size()},
                     {"clusters", s.study.assignment.k()},
                     {"models", models}});
}

Response Service::stations(std::optional<std::size_t> offset, std::optional<std::size_t> limit) const {
  const auto& s = *state_;
  const std::size_t off = offset.value_or(0);
  const std::size_t lim = std::min(limit.value_or(options_.default_limit), options_.max_limit);
  std::map<std::string, std::string> role;
  for (const auto& id : s.study.existing) role[id] = "existing";
  for (const auto& n : s.study.fresh) role[n.station] = "new";
  for (const auto& [id, why] : s.study.excluded) role[id] = "excluded";
  json list = json::array();
  std::size_t i = 0;
  for (const auto& [id, info] : s.study.registry.stations) {
    if (i++ < off) continue;
    if (list.size() >= lim) break;
    json e{{"id", id},
           {"lat", info.coord.lat},
           {"lon", info.coord.lon},
           {"status", std::string(ingest::status_name(info.status))},
           {"role", role.count(id) ? role[id] : std::string("none")},
           {"first_usage", format_civil_time(info.first_usage)}};
    auto c = s.study.assignment.station_cluster.find(id);
    e["cluster"] = c == s.study.assignment.station_cluster.end() ? json(nullptr) : json(c->second);
    list.push_back(std::move(e));
  }
  return reply(200, {{"total", s.study.registry.stations.size()}, {"offset", off}, {"limit", lim}, {"stations", list}});
}

Response Service::clusters() const {
  const auto& s = *state_;
  json list = json::array();
  for (int c = 0; c < s.study.assignment.k(); ++c) {
    const auto members = s.study.assignment.members(c);
    list.push_back({{"id", c},
                    {"centroid", s.study.assignment.centroids[static_cast<std::size_t>(c)]},
                    {"stations", members},
                    {"studied_existing", s.study.existing_in(c).size()},
                    {"model", s.models.has(c, options_.scheme)}});
  }
  return reply(200, {{"k", s.study.assignment.k()}, {"channels", s.channel_names}, {"clusters", list}});
}

Response Service::prediction(const std::string& station, const std::string& from, const std::string& to) const {
  const auto& s = *state_;
  const auto* info = s.study.registry.find(station);
  if (!info) return fail(404, "unknown station " + station);
  auto cit = s.study.assignment.station_cluster.find(station);
  if (cit == s.study.assignment.station_cluster.end())
    return fail(422, "station " + station + " is not in any cluster (not studied under the protocol)");
  const int c = cit->second;
  if (!s.models.has(c, options_.scheme))
    return fail(422, "no " + options_.scheme + " model for cluster " + std::to_string(c));
  const auto t0 = parse_civil_time(from), t1 = parse_civil_time(to);
  if (!t0 || !t1) return fail(400, "from and to must be timestamps (YYYY-MM-DD HH:MM:SS)");
  if (!(*t0 < *t1)) return fail(400, "from must be before to");
  if (!aligned(s.data, *t0) || !aligned(s.data, *t1))
    return fail(400, "from and to must fall on " + std::to_string(s.data.interval_hours()) + " h interval starts");
  const auto& m = s.models.get(c, options_.scheme);
  const int h = s.data.interval_hours();
  const TimeSpan span{t0->plus_hours(-static_cast<std::int64_t>(m.lookback()) * h), *t1};
  if (!covers(s.data.span(), span))
    return fail(422, "inputs for this range are not covered by the loaded data",
                {{"data_span", span_json(s.data.span())}, {"needed", span_json(span)}});
  if ((span.seconds() / (h * kSecondsPerHour)) > static_cast<std::int64_t>(options_.max_limit) * 24)
    return fail(400, "range too long");

  const std::vector<std::string> ids{station};
  auto inputs = pipeline::observed_inputs(s.data, s.study.registry, ids, span, s.scales);
  std::string scale_source = "station";
  if (!s.scales.count(station)) {
    const auto sites = coldstart::select_neighbors(info->coord, s.study.registry, s.experiment.neighbors, station);
    if (sites.empty()) return fail(422, "station has no usage scale and no neighbours to borrow one from");
    inputs[0].scale = blended_scale(coldstart::neighbor_weights(station, info->coord, sites), s.scales);
    scale_source = "neighbors";
  }
  const auto store = pipeline::build_store(s.data, &s.features, inputs, span);
  const std::vector<std::size_t> idx{0};
  const auto samples = train::make_samples(store, idx, 0, store.intervals(), m.lookback());
  auto ws = m.workspace();
  json rows = json::array();
  const auto& sc = store.stations[0].scale;
  for (const auto& smp : samples) {
    const auto y = m.forward(train::window_of(store, smp, m.lookback()), *ws, nullptr);
    const std::size_t target = smp.start + static_cast<std::size_t>(m.lookback());
    const double p = y[0] * sc[0], d = y[1] * sc[1];
    log::debug("prediction " + station + " t=" + std::to_string(target) + " raw=" + std::to_string(p) + "," +
               std::to_string(d));
    rows.push_back({{"time", format_civil_time(store.t0.plus_hours(static_cast<std::int64_t>(target) * h))},
                    {"pickups", std::max(0.0, p)},
                    {"dropoffs", std::max(0.0, d)},
                    {"raw_pickups", p},
                    {"raw_dropoffs", d},
                    {"truth_pickups", inputs[0].usage[target][0]},
                    {"truth_dropoffs", inputs[0].usage[target][1]}});
  }
  return reply(200, {{"station", station},
                     {"cluster", c},
                     {"scheme", options_.scheme},
                     {"fingerprint", m.fingerprint()},
                     {"fingerprint_hash", hex(model::fnv1a64(m.fingerprint()))},
                     {"interval_hours", h},
                     {"scale", {sc[0], sc[1]}},
                     {"scale_source", scale_source},
                     {"predictions", rows}});
}

Response Service::candidates(const std::string& body) const {
  const auto& s = *state_;
  json q;
  try {
    q = json::parse(body);
  } catch (const json::exception& e) {
    return fail(400, std::string("request body is not JSON: ") + e.what());
  }
  if (!q.is_object() || !q.contains("lat") || !q.contains("lon") || !q.contains("launch") || !q["lat"].is_number() ||
      !q["lon"].is_number() || !q["launch"].is_string())
    return fail(400, "request needs numeric lat, lon and a launch timestamp");
  for (const auto& [k, v] : q.items())
    if (k != "lat" && k != "lon" && k != "launch" && k != "horizon" && k != "neighbors" && k != "max_neighbors" &&
        k != "radius_km")
      return fail(400, "unknown field '" + k + "'");
  const LatLon coord{q["lat"].get<double>(), q["lon"].get<double>()};
  const auto launch = parse_civil_time(q["launch"].get<std::string>());
  if (!launch) return fail(400, "launch must be a timestamp (YYYY-MM-DD HH:MM:SS)");
  int horizon = options_.default_horizon;
  if (q.contains("horizon")) {
    if (!q["horizon"].is_number_integer()) return fail(400, "horizon must be an integer");
    horizon = q["horizon"].get<int>();
  }
  if (horizon < 1 || horizon > options_.max_horizon)
    return fail(400, "horizon must be in [1, " + std::to_string(options_.max_horizon) + "]");

  const auto& box = s.data.city.bbox;
  if (!coord.finite() || !box.contains(coord))
    return fail(422, "candidate lies outside the city bounding box",
                {{"bbox", {{"min_lat", box.min_lat}, {"max_lat", box.max_lat}, {"min_lon", box.min_lon},
                           {"max_lon", box.max_lon}}}});
  if (!aligned(s.data, *launch))
    return fail(400, "launch must fall on a " + std::to_string(s.data.interval_hours()) + " h interval start");

  auto policy = s.experiment.neighbors;
  if (q.contains("max_neighbors")) {
    if (!q["max_neighbors"].is_number_integer() || q["max_neighbors"].get<int>() < 1)
      return fail(400, "max_neighbors must be a positive integer");
    policy.max_neighbors = q["max_neighbors"].get<int>();
  }
  if (q.contains("radius_km")) {
    if (!q["radius_km"].is_number() || !(q["radius_km"].get<double>() > 0.0))
      return fail(400, "radius_km must be positive");
    policy.radius_km = q["radius_km"].get<double>();
  }
  std::vector<coldstart::ExistingSite> sites;
  if (q.contains("neighbors")) {
    if (!q["neighbors"].is_array()) return fail(400, "neighbors must be a list of station ids");
    for (const auto& v : q["neighbors"]) {
      if (!v.is_string()) return fail(400, "neighbors must be a list of station ids");
      const auto* n = s.study.registry.find(v.get<std::string>());
      if (!n || n->status != ingest::StationStatus::active_existing)
        return fail(400, "neighbor " + v.get<std::string>() + " is not an active existing station");
      sites.push_back({n->id, n->coord});
    }
    if (sites.empty()) return fail(400, "neighbors override is empty");
  } else {
    sites = coldstart::select_neighbors(coord, s.study.registry, policy);
  }
  if (sites.empty())
    return fail(422, "no active existing station within " + short_num(policy.radius_km) + " km of the candidate",
                {{"radius_km", policy.radius_km}});

  const auto& p = s.experiment.protocol;
  const int h = s.data.interval_hours();
  const int T = p.lookback, V = p.virtual_intervals;
  const TimeSpan span{launch->plus_hours(-static_cast<std::int64_t>(T) * h),
                      launch->plus_hours(static_cast<std::int64_t>(horizon) * h)};
  const TimeSpan vspan = coldstart::virtual_span(*launch, V, h);
  if (!covers(s.data.span(), span) || (V > 0 && !covers(s.data.span(), vspan)))
    return fail(422, "candidate window is not covered by the loaded regional data",
                {{"data_span", span_json(s.data.span())}, {"needed", span_json({std::min(span.begin, vspan.begin), span.end})}});

  const std::string key = "candidate@" + coord_text(coord.lat) + "," + coord_text(coord.lon);
  const auto [first, count] = s.data.slots(p.train);
  const auto sig = pipeline::span_signature(s.features, key, coord, first, count, s.experiment.raw_signatures);
  const int c = cluster::nearest_centroid(s.study.assignment, sig.vector);
  if (!s.models.has(c, options_.scheme))
    return fail(422, "nearest cluster " + std::to_string(c) + " has no trained " + options_.scheme + " model");
  const auto& m = s.models.get(c, options_.scheme);

  auto weights = coldstart::neighbor_weights("candidate", coord, sites);
  pipeline::StationInput in;
  in.station = key;
  in.coord = coord;
  in.usage.assign(static_cast<std::size_t>(T + horizon), model::Usage{0.0, 0.0});
  json vjson = nullptr;
  if (V > 0) {
    std::vector<std::string> ids;
    for (const auto& st : sites) ids.push_back(st.station);
    const auto series = ingest::bin_usage_all(s.data.trips, ids, h, vspan);
    coldstart::VirtualSeries v;
    try {
      v = coldstart::virtual_usage(weights, series, vspan, h);
    } catch (const Error& e) {
      return fail(422, e.what());
    }
    weights = v.weights;
    const std::size_t used = static_cast<std::size_t>(std::min(V, T));
    for (std::size_t k = 0; k < used; ++k)
      in.usage[static_cast<std::size_t>(T) - used + k] = {v.pickups[static_cast<std::size_t>(V) - used + k],
                                                          v.dropoffs[static_cast<std::size_t>(V) - used + k]};
    vjson = {{"t0", format_civil_time(v.t0)}, {"pickups", v.pickups}, {"dropoffs", v.dropoffs},
             {"dropped", v.dropped}};
  }
  in.scale = blended_scale(weights, s.scales);

  const std::vector<pipeline::StationInput> inputs{in};
  auto store = pipeline::build_store(s.data, &s.features, inputs, span);
  auto& frames = store.stations[0];
  auto ws = m.workspace();
  std::vector<double> pick, drop, raw_pick, raw_drop;
  std::vector<std::string> times;
  // Rolling: each forecast (scaled, unclamped) becomes the next input.
  for (int j = 0; j < horizon; ++j) {
    const train::Sample smp{0, static_cast<std::uint32_t>(j)};
    const auto y = m.forward(train::window_of(store, smp, T), *ws, nullptr);
    frames.usage[static_cast<std::size_t>(T + j)] = y;
    const double pu = y[0] * frames.scale[0], du = y[1] * frames.scale[1];
    raw_pick.push_back(pu);
    raw_drop.push_back(du);
    pick.push_back(std::max(0.0, pu));
    drop.push_back(std::max(0.0, du));
    times.push_back(format_civil_time(launch->plus_hours(static_cast<std::int64_t>(j) * h)));
  }
  json raw_log{{"key", key}, {"cluster", c}, {"pickups", raw_pick}, {"dropoffs", raw_drop}};
  log::info("candidate raw outputs " + raw_log.dump());

  const auto slot = s.data.slot(*launch);
  const auto g = s.features.index->aggregate(s.features.grid, coord, slot);
  json out{{"query", {{"lat", coord.lat}, {"lon", coord.lon}, {"launch", format_civil_time(*launch)}, {"horizon", horizon}}},
           {"key", key},
           {"cluster", c},
           {"scheme", options_.scheme},
           {"fingerprint", m.fingerprint()},
           {"fingerprint_hash", hex(model::fnv1a64(m.fingerprint()))},
           {"interval_hours", h},
           {"lookback", T},
           {"times", times},
           {"pickups", pick},
           {"dropoffs", drop},
           {"scale", {frames.scale[0], frames.scale[1]}},
           {"neighbors", neighbors_json(weights)},
           {"neighbor_policy", {{"max_neighbors", policy.max_neighbors}, {"radius_km", policy.radius_km},
                                {"override", q.contains("neighbors")}}},
           {"virtual_history", vjson},
           {"signature", sig.vector},
           {"heatmap", {{"rows", s.features.grid.rows},
                        {"cols", s.features.grid.cols},
                        {"channels", s.channel_names},
                        {"launch_pickups", g.pickups},
                        {"launch_dropoffs", g.dropoffs}}},
           {"signature_span", span_json(p.train)}};
  return reply(200, out);
}

}  // namespace atcor::service
