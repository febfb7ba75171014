// atcor command-line driver: one subcommand per pipeline stage.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "atcor/coldstart/coldstart.hpp"
#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/grid/heatmap_io.hpp"
#include "atcor/ingest/usage.hpp"
#include "atcor/pipeline/evaluation.hpp"
#include "atcor/pipeline/figures.hpp"
#include "atcor/service/http_server.hpp"
#include "atcor/synth/synthetic_city.hpp"

using namespace atcor;
namespace fs = std::filesystem;

namespace {

ingest::CityConfig city_from_arg(const std::string& arg) {
  const auto& ids = ingest::builtin_city_ids();
  if (std::find(ids.begin(), ids.end(), arg) != ids.end()) return ingest::builtin_city(arg);
  return ingest::load_city_config(arg);
}

// --config wins, then the experiment saved in the artifacts, then defaults.
pipeline::Experiment experiment_for(const pipeline::ArtifactPaths& paths, const pipeline::CityData& data,
                                    const std::string& config) {
  if (!config.empty()) return pipeline::load_experiment(config, data.city);
  if (fs::exists(paths.experiment())) return pipeline::load_experiment(paths.experiment(), data.city);
  return pipeline::default_experiment(data.city);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> model_clusters(const pipeline::Study& study) {
  std::vector<int> out;
  for (int c = 0; c < study.assignment.k(); ++c)
    if (!study.existing_in(c).empty()) out.push_back(c);
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  evaluate::write_text(p, text);
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Station-level bike usage forecasting (AtCoR)"};
  app.require_subcommand(1);
  std::string artifacts = "artifacts";
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse raw trip, weather and POI files into an artifacts directory");
  std::string city_arg = "nyc", weather, pois;
  std::vector<std::string> trip_patterns;
  ingest_cmd->add_option("--city", city_arg, "Built-in city id (nyc, chicago, la) or a city config JSON")
      ->capture_default_str();
  ingest_cmd->add_option("--trips", trip_patterns, "Trip CSV files or globs")->required();
  ingest_cmd->add_option("--weather", weather, "Weather CSV")->required();
  ingest_cmd->add_option("--pois", pois, "POI CSV")->required();
  ingest_cmd->add_option("--out", artifacts, "Artifacts directory")->capture_default_str();

  // featurize
  auto* feat_cmd = app.add_subcommand("featurize", "Export station-centered heatmaps");
  std::string stations_arg = "all", span_arg, config;
  feat_cmd->add_option("--artifacts", artifacts)->capture_default_str();
  feat_cmd->add_option("--stations", stations_arg, "Comma-separated ids or 'all' (studied stations)")
      ->capture_default_str();
  feat_cmd->add_option("--span", span_arg, "t0..t1")->required();
  feat_cmd->add_option("--config", config, "Experiment JSON");

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "Classify, select and cluster stations by heatmap signature");
  std::string k_arg = "auto";
  std::uint64_t cluster_seed = 0;
  cluster_cmd->add_option("--artifacts", artifacts)->capture_default_str();
  cluster_cmd->add_option("--k", k_arg, "Number of clusters or 'auto' (elbow); default from the experiment");
  auto* seed_opt = cluster_cmd->add_option("--seed", cluster_seed, "k-means seed");
  cluster_cmd->add_option("--config", config, "Experiment JSON");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train every scheme per cluster");
  std::string cluster_arg = "all";
  train_cmd->add_option("--artifacts", artifacts)->capture_default_str();
  train_cmd->add_option("--cluster", cluster_arg, "Cluster id or 'all'")->capture_default_str();
  train_cmd->add_option("--config", config, "Experiment JSON");

  // coldstart
  auto* cold_cmd = app.add_subcommand("coldstart", "Neighbour weights and virtual history for a site");
  double lat = 0.0, lon = 0.0;
  std::string launch;
  int horizon = 0;
  cold_cmd->add_option("--artifacts", artifacts)->capture_default_str();
  cold_cmd->add_option("--lat", lat)->required();
  cold_cmd->add_option("--lon", lon)->required();
  cold_cmd->add_option("--launch", launch, "Launch interval start")->required();
  cold_cmd->add_option("--horizon", horizon, "Also forecast this many intervals with the trained model");
  cold_cmd->add_option("--config", config, "Experiment JSON");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score trained models under a protocol");
  std::string protocol = "existing", schemes_arg;
  bool plots = false;
  eval_cmd->add_option("--artifacts", artifacts)->capture_default_str();
  eval_cmd->add_option("--protocol", protocol, "existing, new or ablation")
      ->check(CLI::IsMember({"existing", "new", "ablation"}))
      ->capture_default_str();
  eval_cmd->add_option("--schemes", schemes_arg, "Comma-separated subset of the trained schemes");
  eval_cmd->add_flag("--plots", plots, "Write SVG figures next to the reports");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Read-only HTTP prediction service");
  std::string host = "127.0.0.1", serve_city, static_dir;
  int port = 0;
  serve_cmd->add_option("--artifacts", artifacts, "Artifacts directory (env ATCOR_ARTIFACTS)");
  serve_cmd->add_option("--port", port, "Port (env ATCOR_PORT, default 8080)");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--city", serve_city, "Refuse artifacts of another city (env ATCOR_CITY)");
  serve_cmd->add_option("--static", static_dir, "Directory of planner assets served at /");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic city in the raw public-data formats");
  synth::SynthConfig sc;
  std::string synth_out = "synthetic";
  synth_cmd->add_option("--out", synth_out)->capture_default_str();
  synth_cmd->add_option("--city", sc.city, "Dialect of the written trip files")->capture_default_str();
  synth_cmd->add_option("--seed", sc.seed)->capture_default_str();
  synth_cmd->add_option("--days", sc.days)->capture_default_str();
  synth_cmd->add_option("--rows", sc.rows)->capture_default_str();
  synth_cmd->add_option("--cols", sc.cols)->capture_default_str();
  synth_cmd->add_option("--new-stations", sc.new_stations)->capture_default_str();
  synth_cmd->add_option("--rate", sc.mean_rate, "Mean pick-ups per station-hour")->capture_default_str();
  std::string synth_start, new_from, new_to;
  synth_cmd->add_option("--start", synth_start, "First day (YYYY-MM-DD, default 2019-03-15)");
  synth_cmd->add_option("--new-from", new_from, "New stations open on or after this day");
  synth_cmd->add_option("--new-to", new_to, "New stations open on or before this day");

  CLI11_PARSE(app, argc, argv);
  if (verbose) log::set_level(log::Level::debug);
  const pipeline::ArtifactPaths paths(artifacts);

  try {
    if (*ingest_cmd) {
      pipeline::IngestInputs in;
      in.city = city_from_arg(city_arg);
      for (const auto& p : trip_patterns)
        for (auto& f : pipeline::expand_glob(p)) in.trip_files.push_back(f);
      in.weather = weather;
      in.pois = pois;
      pipeline::IngestSummary summary;
      const auto data = pipeline::ingest_city(in, &summary);
      fs::create_directories(paths.root);
      pipeline::save_city_data(paths, data);
      const auto text = pipeline::ingest_summary_text(summary);
      write_file(paths.ingest_report(), text);
      std::cout << text;
      return 0;
    }

    if (*synth_cmd) {
      for (auto [text, date] : {std::pair{&synth_start, &sc.start}, {&new_from, &sc.new_first}, {&new_to, &sc.new_last}}) {
        if (text->empty()) continue;
        const auto d = parse_date(*text);
        if (!d) throw ConfigError("bad date '" + *text + "'");
        *date = *d;
      }
      const auto city = synth::generate_city(sc);
      const auto files = synth::write_city_files(synth_out, city);
      std::cout << "trips=" << city.trips.size() << "\nstations=" << city.stations.size()
                << "\ncity_config=" << files.city_config.string() << "\nweather=" << files.weather.string()
                << "\npois=" << files.pois.string() << "\ntrip_files=" << files.trip_files.size() << "\n";
      return 0;
    }

    if (*serve_cmd) {
      service::ServiceOptions so;
      so.artifacts = artifacts;
      if (serve_cmd->count("--artifacts") == 0) so.artifacts = env_or("ATCOR_ARTIFACTS", artifacts);
      so.city = serve_city.empty() ? env_or("ATCOR_CITY", "") : serve_city;
      service::ServerOptions sv;
      sv.host = host;
      sv.port = port > 0 ? port : std::stoi(env_or("ATCOR_PORT", "8080"));
      sv.static_dir = static_dir;
      const service::Service svc(so);
      service::HttpServer server(svc, sv);
      const bool ok = server.run([&](int p) { log::info("serving on " + sv.host + ":" + std::to_string(p)); });
      if (!ok) {
        log::error("cannot listen on " + sv.host + ":" + std::to_string(sv.port));
        return 1;
      }
      return 0;
    }

    const auto data = pipeline::load_city_data(paths);
    auto experiment = experiment_for(paths, data, config);

    if (*cluster_cmd) {
      if (cluster_cmd->count("--k") == 0) {
      } else if (k_arg == "auto") {
        experiment.k = 0;
      } else {
        try {
          experiment.k = std::stoi(k_arg);
        } catch (const std::exception&) {
          throw ConfigError("--k must be a positive integer or 'auto'");
        }
        if (experiment.k < 1) throw ConfigError("--k must be a positive integer or 'auto'");
      }
      if (*seed_opt) experiment.cluster_seed = cluster_seed;
      experiment.validate();
      const auto features = pipeline::make_features(data, experiment.grid);
      const auto study = pipeline::run_study(data, features, experiment);
      pipeline::write_study(paths, study, features.channel_names);
      write_file(paths.experiment(), pipeline::experiment_json(experiment) + "\n");
      std::cout << "k=" << study.assignment.k() << "\nexisting=" << study.existing.size()
                << "\nnew=" << study.fresh.size() << "\nexcluded=" << study.excluded.size() << "\n";
      for (int c = 0; c < study.assignment.k(); ++c)
        std::cout << "cluster." << c << "=" << study.assignment.members(c).size() << "\n";
      return 0;
    }

    if (*feat_cmd) {
      const auto span = parse_span(span_arg);
      if (!span) throw ConfigError("--span must look like t0..t1");
      const auto features = pipeline::make_features(data, experiment.grid);
      std::vector<std::pair<std::string, LatLon>> sites;
      if (stations_arg == "all") {
        const auto study = pipeline::read_study(paths);
        for (const auto& id : study.existing) sites.emplace_back(id, study.registry.stations.at(id).coord);
        for (const auto& n : study.fresh) sites.emplace_back(n.station, n.coord);
      } else {
        for (const auto& id : split_list(stations_arg)) {
          const auto* info = data.registry.find(id);
          if (!info) throw Error("unknown station " + id);
          sites.emplace_back(id, info->coord);
        }
      }
      grid::HeatmapFile file;
      file.channel_names = features.channel_names;
      for (const auto& [id, coord] : sites) {
        auto hs = features.builder->series(id, coord, *span);
        file.heatmaps.insert(file.heatmaps.end(), std::make_move_iterator(hs.begin()),
                             std::make_move_iterator(hs.end()));
      }
      grid::write_heatmaps(paths.heatmaps(), file);
      std::ofstream txt(paths.heatmaps_text());
      grid::dump_heatmaps_text(txt, file);
      std::cout << "heatmaps=" << file.heatmaps.size() << "\nbinary=" << paths.heatmaps().string()
                << "\ntext=" << paths.heatmaps_text().string() << "\n";
      return 0;
    }

    if (*train_cmd) {
      experiment.validate();
      const auto study = pipeline::read_study(paths);
      std::vector<int> clusters;
      if (cluster_arg != "all") {
        try {
          clusters.push_back(std::stoi(cluster_arg));
        } catch (const std::exception&) {
          throw ConfigError("--cluster must be a cluster id or 'all'");
        }
      } else {
        clusters = model_clusters(study);
      }
      const auto features = pipeline::make_features(data, experiment.grid);
      const int every = std::max(1, experiment.train.monitor_every);
      const auto outcomes = pipeline::run_train(
          paths, data, features, experiment, study, clusters,
          [every](int c, const std::string& scheme, int epoch, double loss) {
            if (epoch % every == 0)
              log::info("cluster " + std::to_string(c) + " " + scheme + " epoch " + std::to_string(epoch) +
                        " loss " + std::to_string(loss));
          });
      for (const auto& o : outcomes)
        std::cout << "cluster." << o.cluster << "." << o.scheme << ".train_samples=" << o.train_samples
                  << "\ncluster." << o.cluster << "." << o.scheme
                  << ".final_loss=" << (o.result.loss.empty() ? 0.0 : o.result.loss.back()) << "\n";
      return 0;
    }

    if (*cold_cmd) {
      const auto t = parse_civil_time(launch);
      if (!t) throw ConfigError("--launch must be a timestamp");
      const LatLon coord{lat, lon};
      if (!data.city.bbox.contains(coord)) throw ConfigError("site lies outside the city bounding box");
      const auto study = pipeline::read_study(paths);
      const auto sites = coldstart::select_neighbors(coord, study.registry, experiment.neighbors);
      if (sites.empty())
        throw Error("no active existing station within " + std::to_string(experiment.neighbors.radius_km) + " km");
      const int h = data.interval_hours();
      const auto vspan = coldstart::virtual_span(*t, experiment.protocol.virtual_intervals, h);
      std::vector<std::string> ids;
      for (const auto& s : sites) ids.push_back(s.station);
      const auto series = ingest::bin_usage_all(data.trips, ids, h, vspan);
      const auto v = coldstart::virtual_usage(coldstart::neighbor_weights("candidate", coord, sites), series, vspan, h);
      fs::create_directories(paths.coldstart());
      coldstart::write_neighbor_weights(paths.coldstart() / "neighbor_weights.tsv", v.weights);
      coldstart::write_virtual_series(paths.coldstart() / "virtual_series.tsv", v);
      std::cout << "neighbors=" << v.weights.neighbors.size() << "\nweights="
                << (paths.coldstart() / "neighbor_weights.tsv").string()
                << "\nvirtual=" << (paths.coldstart() / "virtual_series.tsv").string() << "\n";
      if (horizon > 0) {
        service::ServiceOptions so;
        so.artifacts = artifacts;
        so.max_horizon = std::max(so.max_horizon, horizon);
        const service::Service svc(so);
        nlohmann::json q{{"lat", lat}, {"lon", lon}, {"launch", format_civil_time(*t)}, {"horizon", horizon}};
        const auto r = svc.candidates(q.dump());
        write_file(paths.coldstart() / "forecast.json", r.body + "\n");
        if (r.status != 200) throw Error("forecast failed: " + r.body);
        std::cout << "forecast=" << (paths.coldstart() / "forecast.json").string() << "\n";
      }
      return 0;
    }

    if (*eval_cmd) {
      const auto study = pipeline::read_study(paths);
      std::vector<std::string> schemes = schemes_arg.empty() ? experiment.schemes : split_list(schemes_arg);
      if (protocol == "ablation") schemes = {"atcor"};
      const auto features = pipeline::make_features(data, experiment.grid);
      const auto models = pipeline::ModelBank::load(paths, model_clusters(study), schemes);
      const pipeline::EvalContext ctx{data, features, experiment, study, models, pipeline::read_scales(paths.scales())};
      std::vector<evaluate::EvalReport> reports;
      std::string table;
      if (protocol == "existing") {
        reports = pipeline::eval_existing(ctx, schemes);
        table = evaluate::existing_table(reports);
      } else if (protocol == "new") {
        reports = pipeline::eval_new(ctx, schemes);
        table = evaluate::new_station_table(reports);
      } else {
        auto a = pipeline::eval_ablation(ctx);
        table = evaluate::ablation_table(a.with_virtual, a.without_virtual);
        reports = {a.with_virtual, a.without_virtual};
      }
      const auto dir = paths.reports();
      write_file(dir / (protocol + "_table.txt"), table);
      write_file(dir / (protocol + "_records.txt"), evaluate::report_records(reports));
      std::cout << table;
      if (plots) {
        const auto pdir = dir / "plots";
        fs::create_directories(pdir);
        auto files = pipeline::write_prediction_plots(pdir, reports);
        for (auto& f : pipeline::write_exploratory_plots(pdir, data, features, study)) files.push_back(f);
        for (const auto& f : files) std::cout << "plot=" << f.string() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    log::error(e.what());
    return 1;
  }
  return 0;
}
