#include "atcor/synth/synthetic_city.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include <json.hpp>

#include "atcor/common/error.hpp"
#include "atcor/common/rng.hpp"
#include "atcor/ingest/pois.hpp"
#include "atcor/ingest/stations.hpp"

namespace atcor::synth {

namespace {

double bump(double h, double mu, double sigma) { return std::exp(-(h - mu) * (h - mu) / (2.0 * sigma * sigma)); }

// Pick-up intensity by hour for one land use; mean close to 1 over a day.
double pickup_profile(Land land, bool weekend, int hour) {
  const double h = hour + 0.5;
  if (weekend) return 0.15 + 1.6 * bump(h, 14.0, 3.5) + (land == Land::leisure ? 0.9 * bump(h, 12.0, 2.5) : 0.0);
  switch (land) {
    case Land::residential:
      return 0.1 + 3.2 * bump(h, 8.3, 1.2) + 1.0 * bump(h, 18.5, 2.0) + 0.4 * bump(h, 13.0, 3.0);
    case Land::commercial:
      return 0.1 + 0.9 * bump(h, 8.5, 1.3) + 3.0 * bump(h, 17.8, 1.4) + 0.7 * bump(h, 12.5, 1.2);
    case Land::leisure:
      return 0.15 + 0.5 * bump(h, 8.5, 1.5) + 1.8 * bump(h, 14.5, 3.0) + 0.6 * bump(h, 19.0, 1.5);
  }
  return 1.0;
}

// Destination attraction: commuters ride home in the evening and to work
// in the morning, so the profiles swap.
double attraction(Land land, bool weekend, int hour) {
  if (land == Land::residential) return pickup_profile(Land::commercial, weekend, hour);
  if (land == Land::commercial) return pickup_profile(Land::residential, weekend, hour);
  return pickup_profile(Land::leisure, weekend, hour);
}

double seasonal(CivilTime t) {
  const auto d = date_of(t);
  const double doy = static_cast<double>(day_index(t) - days_from_civil({d.year, 1, 1}));
  return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (doy - 20.0) / 365.0);
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

const char* land_name(Land l) {
  switch (l) {
    case Land::residential: return "residential";
    case Land::commercial: return "commercial";
    case Land::leisure: return "leisure";
  }
  return "?";
}

// POI categories typical of a land use, by substring of the city's labels.
double poi_affinity(Land land, const std::string& category) {
  auto has = [&](const char* s) { return category.find(s) != std::string::npos; };
  switch (land) {
    case Land::residential:
      return has("residential") || has("education") || has("religious") || has("social") ? 3.0 : 1.0;
    case Land::commercial:
      return has("commercial") || has("financial") || has("industry") || has("government") || has("sustenance")
                 ? 3.0
                 : 1.0;
    case Land::leisure:
      return has("recreat") || has("cultur") || has("arts") || has("water") || has("entertainment") ? 3.0 : 1.0;
  }
  return 1.0;
}

}  // namespace

SyntheticCity generate_city(const SynthConfig& cfg) {
  if (cfg.rows < 1 || cfg.cols < 1 || cfg.days < 2 || cfg.spacing_m <= 0.0 || cfg.mean_rate <= 0.0)
    throw ConfigError("synthetic city needs rows, cols >= 1, days >= 2 and positive spacing and rate");
  SyntheticCity city;
  city.config = ingest::builtin_city(cfg.city);
  Rng rng(cfg.seed);

  const CivilTime t0{days_from_civil(cfg.start) * kSecondsPerDay};
  const std::int64_t hours = static_cast<std::int64_t>(cfg.days) * 24;

  // Existing stations on a jittered lattice; commercial core, leisure along
  // the western edge, residential elsewhere.
  const double half_h = (cfg.rows - 1) * cfg.spacing_m / 2.0, half_w = (cfg.cols - 1) * cfg.spacing_m / 2.0;
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      PlantedStation s;
      s.id = std::to_string(3000 + r * cfg.cols + c);
      const double north = half_h - r * cfg.spacing_m + rng.uniform(-0.15, 0.15) * cfg.spacing_m;
      const double east = -half_w + c * cfg.spacing_m + rng.uniform(-0.15, 0.15) * cfg.spacing_m;
      s.coord = offset_position(cfg.center, north, east);
      const double core = std::hypot(north / std::max(half_h, 1.0), east / std::max(half_w, 1.0));
      s.land = core < 0.45 ? Land::commercial : (c <= cfg.cols / 6 ? Land::leisure : Land::residential);
      if (rng.uniform() < 0.15) s.land = static_cast<Land>(rng.index(3));
      s.base = cfg.mean_rate * std::exp(0.45 * rng.normal() - 0.1) * (s.land == Land::commercial ? 1.25 : 1.0);
      s.opens = t0;
      city.stations.push_back(std::move(s));
    }
  const std::size_t n_existing = city.stations.size();

  // New stations between lattice points, inheriting the local land use and
  // the mean demand of their lattice neighbours.
  const std::int64_t first_day = days_from_civil(cfg.new_first), last_day = days_from_civil(cfg.new_last);
  for (int k = 0; k < cfg.new_stations; ++k) {
    PlantedStation s;
    s.id = std::to_string(3900 + k);
    s.is_new = true;
    const auto open_day = first_day + static_cast<std::int64_t>(rng.index(
                                          static_cast<std::size_t>(std::max<std::int64_t>(1, last_day - first_day + 1))));
    s.opens = CivilTime{open_day * kSecondsPerDay}.plus_hours(6 + static_cast<std::int64_t>(rng.index(4)));
    if (k == 0 && cfg.clone_fixture) {
      const auto& src = city.stations[n_existing / 2];
      s.coord = offset_position(src.coord, 90.0, 0.0);
      s.land = src.land;
      s.base = src.base;
      s.clone_of = src.id;
    } else {
      const double north = rng.uniform(-0.8, 0.8) * half_h + 0.5 * cfg.spacing_m;
      const double east = rng.uniform(-0.8, 0.8) * half_w + 0.5 * cfg.spacing_m;
      s.coord = offset_position(cfg.center, north, east);
      std::vector<std::pair<double, std::size_t>> near;
      for (std::size_t i = 0; i < n_existing; ++i)
        near.emplace_back(haversine_km(s.coord, city.stations[i].coord), i);
      std::sort(near.begin(), near.end());
      double base = 0.0;
      const std::size_t m = std::min<std::size_t>(4, near.size());
      for (std::size_t i = 0; i < m; ++i) base += city.stations[near[i].second].base;
      s.base = base / static_cast<double>(m);
      s.land = city.stations[near[0].second].land;
    }
    city.stations.push_back(std::move(s));
  }
  const std::size_t n = city.stations.size();

  // Regions sharing a latent demand factor.
  std::vector<std::size_t> region(n);
  std::map<std::pair<long, long>, std::size_t> region_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto off = equirect_offset(cfg.center, city.stations[i].coord);
    const std::pair<long, long> key{std::lround(std::floor(off.north_m / cfg.region_m)),
                                    std::lround(std::floor(off.east_m / cfg.region_m))};
    region[i] = region_ids.emplace(key, region_ids.size()).first->second;
  }
  std::vector<double> latent(region_ids.size(), 0.0);

  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = haversine_km(city.stations[i].coord, city.stations[j].coord);

  // Destination CDFs per (weekend, hour, origin), rebuilt when a station opens.
  std::vector<char> open(n, 0);
  std::vector<std::vector<double>> cdf(2 * 24 * n);
  auto rebuild = [&] {
    for (int we = 0; we < 2; ++we)
      for (int h = 0; h < 24; ++h)
        for (std::size_t o = 0; o < n; ++o) {
          auto& c = cdf[(static_cast<std::size_t>(we) * 24 + static_cast<std::size_t>(h)) * n + o];
          c.assign(n, 0.0);
          double acc = 0.0;
          for (std::size_t d = 0; d < n; ++d) {
            if (open[d]) {
              const auto& s = city.stations[d];
              acc += attraction(s.land, we == 1, h) * s.base * std::exp(-dist[o][d] / 1.2) * (o == d ? 0.3 : 1.0);
            }
            c[d] = acc;
          }
        }
  };

  double temp_noise = 0.0, wind = 8.0;
  int rain_left = 0;
  double rain_rate = 0.0;
  for (std::int64_t hr = 0; hr < hours + 24; ++hr) {
    const CivilTime t = t0.plus_hours(hr);
    const int hour = static_cast<int>(hr % 24);
    // Weather, one reading per hour (one extra day so late trips are covered).
    temp_noise = 0.9 * temp_noise + 1.2 * rng.normal();
    const double temp =
        38.0 + 44.0 * seasonal(t) + 7.0 * std::sin(2.0 * std::numbers::pi * (hour - 9) / 24.0) + temp_noise;
    wind = std::max(0.0, wind + 0.15 * (9.0 - wind) + 1.5 * rng.normal());
    if (rain_left == 0 && rng.uniform() < 0.03) {
      rain_left = 1 + static_cast<int>(rng.poisson(2.0));
      rain_rate = rng.uniform(0.02, 0.3);
    }
    const bool raining = rain_left > 0;
    if (raining) --rain_left;
    city.weather.push_back({t, temp, wind, raining ? rain_rate : 0.0});
    if (hr >= hours) continue;

    for (auto& z : latent) z = cfg.latent_phi * z + cfg.latent_sigma * rng.normal();
    bool changed = hr == 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!open[i] && city.stations[i].opens <= t) open[i] = 1, changed = true;
    if (changed) rebuild();

    const auto day = day_index(t);
    const bool weekend = is_weekend_day(day) || city.config.is_holiday(date_of(t));
    const double temp_factor = std::clamp(0.35 + 0.014 * (temp - 40.0), 0.3, 1.15) * (temp > 88.0 ? 0.85 : 1.0);
    const double weather_factor =
        temp_factor * (raining ? cfg.rain_factor : 1.0) * (1.0 - 0.012 * std::max(0.0, wind - 12.0));
    const auto* row = &cdf[(static_cast<std::size_t>(weekend ? 1 : 0) * 24 + static_cast<std::size_t>(hour)) * n];
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const auto& s = city.stations[i];
      const double z = latent[region[i]];
      const double rate = s.base * pickup_profile(s.land, weekend, hour) * weather_factor *
                          std::exp(z - 0.5 * cfg.latent_sigma * cfg.latent_sigma / (1.0 - cfg.latent_phi * cfg.latent_phi));
      const auto k = rng.poisson(rate);
      const auto& c = row[i];
      for (std::int64_t e = 0; e < k; ++e) {
        const double u = rng.uniform() * c.back();
        const auto d = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
        const std::size_t dst = std::min(d, n - 1);
        ingest::TripRecord trip;
        trip.start_time = t.plus_seconds(static_cast<std::int64_t>(rng.index(3600)));
        const double minutes = std::min(120.0, 4.0 + dist[i][dst] / 0.19 * std::exp(0.25 * rng.normal()));
        trip.end_time = trip.start_time.plus_seconds(static_cast<std::int64_t>(minutes * 60.0));
        trip.start_station = s.id;
        trip.end_station = city.stations[dst].id;
        trip.start_coord = s.coord;
        trip.end_coord = city.stations[dst].coord;
        city.trips.push_back(std::move(trip));
      }
    }
  }
  std::stable_sort(city.trips.begin(), city.trips.end(),
                   [](const auto& a, const auto& b) { return a.start_time < b.start_time; });

  // POIs around each station, skewed toward its land use, plus background.
  const auto& cats = city.config.poi_categories;
  std::vector<double> w(cats.size());
  for (const auto& s : city.stations) {
    double total = 0.0;
    for (std::size_t k = 0; k < cats.size(); ++k) total += (w[k] = poi_affinity(s.land, cats[k]));
    for (int p = 0; p < cfg.pois_per_station; ++p) {
      double u = rng.uniform() * total;
      std::size_t k = 0;
      while (k + 1 < cats.size() && u >= w[k]) u -= w[k++];
      city.pois.push_back({cats[k], offset_position(s.coord, rng.normal() * 180.0, rng.normal() * 180.0)});
    }
  }
  for (int p = 0; p < cfg.rows * cfg.cols; ++p)
    city.pois.push_back({cats[rng.index(cats.size())],
                         offset_position(cfg.center, rng.uniform(-1.2, 1.2) * half_h, rng.uniform(-1.2, 1.2) * half_w)});
  return city;
}

pipeline::CityData to_city_data(const SyntheticCity& city) {
  if (city.trips.empty()) throw IngestError("synthetic city has no trips");
  pipeline::CityData d;
  d.city = city.config;
  d.trips = city.trips;
  CivilTime last = d.trips.front().end_time;
  for (const auto& t : d.trips) last = std::max(last, t.end_time);
  const TimeSpan span{CivilTime{day_index(d.trips.front().start_time) * kSecondsPerDay},
                      CivilTime{(day_index(last) + 1) * kSecondsPerDay}};
  d.externals = ingest::load_external(city.weather, d.city, span, d.city.interval_hours);
  for (const auto& p : city.pois) d.pois.pois.push_back({d.city.poi_channel_of(p.category), p.coord});
  d.registry = ingest::collect_stations(d.trips);
  return d;
}

WrittenFiles write_city_files(const std::filesystem::path& dir, const SyntheticCity& city) {
  std::filesystem::create_directories(dir);
  WrittenFiles out;
  auto open_file = [](const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write " + p.string());
    return f;
  };

  const auto& sc = city.config.schema;
  std::ofstream trips;
  std::string month;
  for (const auto& t : city.trips) {
    const auto d = date_of(t.start_time);
    char key[16];
    std::snprintf(key, sizeof key, "%04d%02d", d.year, d.month);
    if (key != month) {
      month = key;
      out.trip_files.push_back(dir / (month + "-" + city.config.id + "-tripdata.csv"));
      trips = open_file(out.trip_files.back());
      trips << quoted("tripduration") << ',' << quoted(sc.start_time) << ',' << quoted(sc.end_time) << ','
            << quoted(sc.start_station) << ',' << quoted(sc.start_lat) << ',' << quoted(sc.start_lon) << ','
            << quoted(sc.end_station) << ',' << quoted(sc.end_lat) << ',' << quoted(sc.end_lon) << '\n';
    }
    trips << (t.end_time.seconds - t.start_time.seconds) << ',' << quoted(format_civil_time(t.start_time) + ".0000")
          << ',' << quoted(format_civil_time(t.end_time) + ".0000") << ',' << quoted(t.start_station) << ','
          << fixed(t.start_coord.lat, 6) << ',' << fixed(t.start_coord.lon, 6) << ',' << quoted(t.end_station) << ','
          << fixed(t.end_coord.lat, 6) << ',' << fixed(t.end_coord.lon, 6) << '\n';
  }
  trips.close();

  out.weather = dir / "weather.csv";
  {
    auto f = open_file(out.weather);
    f << "timestamp,temperature_f,wind_mph,precipitation_in\n";
    for (const auto& w : city.weather)
      f << format_civil_time(w.time) << ',' << fixed(w.temperature_f, 1) << ',' << fixed(w.wind_mph, 1) << ','
        << fixed(w.precipitation_in, 3) << '\n';
  }
  out.pois = dir / "pois.csv";
  {
    auto f = open_file(out.pois);
    f << "category,lat,lon\n";
    for (const auto& p : city.pois)
      f << quoted(p.category) << ',' << fixed(p.coord.lat, 6) << ',' << fixed(p.coord.lon, 6) << '\n';
  }
  out.holidays = dir / "holidays.txt";
  {
    auto f = open_file(out.holidays);
    f << "# one date per line\n";
    for (const auto& d : city.config.holidays) f << format_date(d) << '\n';
  }
  out.city_config = dir / "city.json";
  {
    auto j = nlohmann::json::parse(ingest::city_config_json(city.config));
    j.erase("holidays");
    j["holiday_file"] = "holidays.txt";
    open_file(out.city_config) << j.dump(2) << '\n';
  }
  out.stations = dir / "planted_stations.csv";
  {
    auto f = open_file(out.stations);
    f << "id,lat,lon,land,base_rate,is_new,opens,clone_of\n";
    for (const auto& s : city.stations)
      f << s.id << ',' << fixed(s.coord.lat, 6) << ',' << fixed(s.coord.lon, 6) << ',' << land_name(s.land) << ','
        << fixed(s.base, 4) << ',' << (s.is_new ? 1 : 0) << ',' << format_civil_time(s.opens) << ',' << s.clone_of
        << '\n';
  }
  return out;
}

}  // namespace atcor::synth
