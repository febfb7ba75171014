#include "atcor/pipeline/figures.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

#include "atcor/common/geo.hpp"
#include "atcor/evaluate/plots.hpp"

namespace atcor::pipeline {

namespace {

namespace svg = evaluate::svg;

fs::path put(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  evaluate::write_text(p, body);
  return p;
}

std::string safe(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

std::vector<fs::path> write_prediction_plots(const fs::path& dir, std::span<const evaluate::EvalReport> reports,
                                             std::size_t stations) {
  std::vector<fs::path> out;
  const evaluate::EvalReport* lead = nullptr;
  for (const auto& r : reports)
    if (!lead && r.scheme == "atcor") lead = &r;
  if (!lead && !reports.empty()) lead = &reports.front();
  if (!lead) return out;
  for (std::size_t i = 0; i < std::min(stations, lead->traces.size()); ++i) {
    const auto& tr = lead->traces[i];
    const std::size_t n = std::min<std::size_t>(tr.truth_pickups.size(), static_cast<std::size_t>(168 / std::max(1, tr.interval_hours)));
    for (int target = 0; target < 2; ++target) {
      std::vector<svg::Series> series;
      svg::Series truth{"truth", {}, {}};
      for (std::size_t t = 0; t < n; ++t) {
        truth.x.push_back(static_cast<double>(t * static_cast<std::size_t>(tr.interval_hours)));
        truth.y.push_back(target == 0 ? tr.truth_pickups[t] : tr.truth_dropoffs[t]);
      }
      series.push_back(truth);
      for (const auto& r : reports) {
        auto it = std::find_if(r.traces.begin(), r.traces.end(), [&](const auto& x) { return x.station == tr.station; });
        if (it == r.traces.end()) continue;
        svg::Series s{r.scheme, truth.x, {}};
        for (std::size_t t = 0; t < n && t < it->pred_pickups.size(); ++t)
          s.y.push_back(target == 0 ? it->pred_pickups[t] : it->pred_dropoffs[t]);
        series.push_back(std::move(s));
      }
      const std::string what = target == 0 ? "pick-ups" : "drop-offs";
      out.push_back(put(dir, "prediction_" + safe(tr.station) + (target == 0 ? "_pickups" : "_dropoffs") + ".svg",
                        svg::line_chart("Station " + tr.station + " " + what + " from " + format_civil_time(tr.t0),
                                        "hours", what, series)));
    }
  }
  return out;
}

std::vector<fs::path> write_exploratory_plots(const fs::path& dir, const CityData& data, const Features& features,
                                              const Study& study) {
  std::vector<fs::path> out;

  // Stations per month: active existing used every day of the month; new
  // first used in the month after at least 30 days of data without them.
  {
    std::map<std::string, std::set<std::int64_t>> days;
    for (const auto& t : data.trips) {
      days[t.start_station].insert(day_index(t.start_time));
      days[t.end_station].insert(day_index(t.end_time));
    }
    const auto first_day = day_index(data.span().begin), last_day = day_index(data.span().end) - 1;
    std::vector<std::string> months;
    std::vector<double> active, fresh;
    auto d = civil_from_days(first_day);
    for (CivilDate m{d.year, d.month, 1}; days_from_civil(m) <= last_day;) {
      CivilDate next{m.month == 12 ? m.year + 1 : m.year, m.month == 12 ? 1 : m.month + 1, 1};
      const auto a = std::max(days_from_civil(m), first_day), b = std::min(days_from_civil(next) - 1, last_day);
      double na = 0, nn = 0;
      for (const auto& [id, set] : days) {
        const auto lo = set.lower_bound(a), hi = set.upper_bound(b);
        if (static_cast<std::int64_t>(std::distance(lo, hi)) == b - a + 1) ++na;
        const auto first = *set.begin();
        if (first >= a && first <= b && first - first_day >= 30) ++nn;
      }
      months.push_back(format_date(m).substr(0, 7));
      active.push_back(na);
      fresh.push_back(nn);
      m = next;
    }
    const std::vector<svg::Series> s{{"active existing", {}, active}, {"new", {}, fresh}};
    out.push_back(put(dir, "stations_per_month.svg", svg::bar_chart("Stations per month", "stations", months, s)));
  }

  // POI counts inside the grid around the studied stations.
  {
    const auto pc = data.city.poi_channels();
    std::vector<double> mean(pc, 0.0);
    std::vector<std::pair<std::string, LatLon>> sites;
    for (const auto& id : study.existing) sites.emplace_back(id, study.registry.stations.at(id).coord);
    for (const auto& n : study.fresh) sites.emplace_back(n.station, n.coord);
    for (const auto& [id, c] : sites) {
      const auto g = grid::aggregate_pois(data.pois, features.grid, c, pc);
      for (std::size_t ch = 0; ch < pc; ++ch)
        for (std::size_t i = 0; i < features.grid.cells(); ++i) mean[ch] += g[ch * features.grid.cells() + i];
    }
    for (auto& v : mean) v /= std::max<double>(1.0, static_cast<double>(sites.size()));
    const std::vector<svg::Series> s{{"mean POIs per station grid", {}, mean}};
    out.push_back(put(dir, "poi_distribution.svg",
                      svg::bar_chart("POI categories around studied stations", "POIs", data.city.poi_categories, s)));
  }

  // Daily usage against the weather.
  {
    std::map<std::int64_t, double> trips;
    for (const auto& t : data.trips) trips[day_index(t.start_time)] += 1.0;
    std::map<std::int64_t, std::array<double, 4>> w;  // temp sum, wind sum, precip sum, n
    for (std::size_t i = 0; i < data.externals.size(); ++i) {
      const auto day =
          day_index(data.externals.t0.plus_hours(static_cast<std::int64_t>(i) * data.interval_hours()));
      auto& a = w[day];
      a[0] += data.externals.values[i][0];
      a[1] += data.externals.values[i][1];
      a[2] += data.externals.values[i][2];
      a[3] += 1.0;
    }
    svg::Series temp{"days", {}, {}, true}, wind{"days", {}, {}, true}, rain{"days", {}, {}, true};
    for (const auto& [day, a] : w) {
      const double u = trips.count(day) ? trips[day] : 0.0;
      temp.x.push_back(a[0] / a[3]), temp.y.push_back(u);
      wind.x.push_back(a[1] / a[3]), wind.y.push_back(u);
      rain.x.push_back(a[2]), rain.y.push_back(u);
    }
    out.push_back(put(dir, "usage_vs_temperature.svg",
                      svg::line_chart("Daily trips against mean temperature", "temperature (F)", "trips",
                                      std::span<const svg::Series>(&temp, 1))));
    out.push_back(put(dir, "usage_vs_wind.svg",
                      svg::line_chart("Daily trips against mean wind speed", "wind (mph)", "trips",
                                      std::span<const svg::Series>(&wind, 1))));
    out.push_back(put(dir, "usage_vs_precipitation.svg",
                      svg::line_chart("Daily trips against precipitation", "precipitation (in)", "trips",
                                      std::span<const svg::Series>(&rain, 1))));
  }

  // Trip distance distribution, 250 m bins up to 8 km.
  {
    const double bin = 250.0;
    std::vector<double> counts(32, 0.0);
    for (const auto& t : data.trips) {
      const double m = haversine_km(t.start_coord, t.end_coord) * 1000.0;
      const auto b = static_cast<std::size_t>(m / bin);
      if (b < counts.size()) counts[b] += 1.0;
    }
    const double total = static_cast<double>(std::max<std::size_t>(1, data.trips.size()));
    svg::Series s{"share of trips", {}, {}};
    for (std::size_t i = 0; i < counts.size(); ++i) {
      s.x.push_back((static_cast<double>(i) + 0.5) * bin);
      s.y.push_back(counts[i] / total);
    }
    out.push_back(put(dir, "trip_distance.svg",
                      svg::line_chart("Trip distance distribution", "distance (m)", "share of trips",
                                      std::span<const svg::Series>(&s, 1))));
  }

  // Regional pick-ups around one studied station at its busiest hour of the
  // first training week.
  {
    std::string id;
    LatLon c;
    if (!study.fresh.empty()) id = study.fresh.front().station, c = study.fresh.front().coord;
    else if (!study.existing.empty()) id = study.existing.front(), c = study.registry.stations.at(id).coord;
    if (!id.empty()) {
      const auto& idx = *features.index;
      const std::size_t n = std::min<std::size_t>(idx.intervals(), 168);
      std::size_t best = 0;
      double best_sum = -1.0;
      for (std::size_t t = 0; t < n; ++t) {
        const auto g = idx.aggregate(features.grid, c, t);
        double s = 0;
        for (double v : g.pickups) s += v;
        if (s > best_sum) best_sum = s, best = t;
      }
      const auto g = idx.aggregate(features.grid, c, best);
      out.push_back(put(dir, "regional_pickups.svg",
                        svg::grid_image("Regional pick-ups around " + id + " at " +
                                            format_civil_time(idx.interval_start(best)),
                                        features.grid.rows, features.grid.cols, g.pickups)));
    }
  }
  return out;
}

}  // namespace atcor::pipeline
