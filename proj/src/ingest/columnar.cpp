#include "atcor/ingest/columnar.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"

namespace atcor::ingest {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path.string());
  return out;
}

struct Table {
  std::ifstream in;
  std::unique_ptr<DelimitedReader> reader;
  std::string name;

  explicit Table(const std::filesystem::path& path) : in(path), name(path.string()) {
    if (!in) throw IngestError("cannot read " + name);
    reader = std::make_unique<DelimitedReader>(in, '\t');
  }

  std::size_t col(const char* c) const {
    auto i = reader->column(c);
    if (!i) throw IngestError(name + ": missing column '" + c + "'");
    return *i;
  }

  [[noreturn]] void fail() const {
    throw IngestError(name + ":" + std::to_string(reader->line_number()) + ": malformed record");
  }

  CivilTime time(const std::string& s) const {
    auto t = parse_civil_time(s);
    if (!t) fail();
    return *t;
  }
  double real(const std::string& s) const {
    auto v = parse_double(s);
    if (!v) fail();
    return *v;
  }
  long long integer(const std::string& s) const {
    auto v = parse_int(s);
    if (!v) fail();
    return *v;
  }
};

}  // namespace

void write_trips(const std::filesystem::path& path, std::span<const TripRecord> trips) {
  auto out = open_out(path);
  out << "start_time\tend_time\tstart_station\tend_station\tstart_lat\tstart_lon\tend_lat\tend_lon\n";
  for (const auto& t : trips) {
    out << format_civil_time(t.start_time) << '\t' << format_civil_time(t.end_time) << '\t' << t.start_station
        << '\t' << t.end_station << '\t' << num(t.start_coord.lat) << '\t' << num(t.start_coord.lon) << '\t'
        << num(t.end_coord.lat) << '\t' << num(t.end_coord.lon) << '\n';
  }
}

std::vector<TripRecord> read_trips(const std::filesystem::path& path) {
  Table tab(path);
  const std::size_t c[] = {tab.col("start_time"), tab.col("end_time"), tab.col("start_station"),
                           tab.col("end_station"), tab.col("start_lat"), tab.col("start_lon"),
                           tab.col("end_lat"),     tab.col("end_lon")};
  std::vector<TripRecord> out;
  std::vector<std::string> row;
  while (tab.reader->next(row)) {
    if (row.size() < 8) tab.fail();
    out.push_back(TripRecord{tab.time(row[c[0]]), tab.time(row[c[1]]), row[c[2]], row[c[3]],
                             LatLon{tab.real(row[c[4]]), tab.real(row[c[5]])},
                             LatLon{tab.real(row[c[6]]), tab.real(row[c[7]])}});
  }
  return out;
}

void write_usage(const std::filesystem::path& path, const std::map<std::string, UsageSeries>& series) {
  auto out = open_out(path);
  out << "station\tinterval_start\tinterval_hours\tpickups\tdropoffs\n";
  for (const auto& [id, s] : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << id << '\t' << format_civil_time(s.interval_start(i)) << '\t' << s.interval_hours << '\t'
          << s.pickups[i] << '\t' << s.dropoffs[i] << '\n';
    }
  }
}

std::map<std::string, UsageSeries> read_usage(const std::filesystem::path& path) {
  Table tab(path);
  const std::size_t c[] = {tab.col("station"), tab.col("interval_start"), tab.col("interval_hours"),
                           tab.col("pickups"), tab.col("dropoffs")};
  std::map<std::string, UsageSeries> out;
  std::vector<std::string> row;
  while (tab.reader->next(row)) {
    if (row.size() < 5) tab.fail();
    auto& s = out[row[c[0]]];
    const CivilTime t = tab.time(row[c[1]]);
    const int hours = static_cast<int>(tab.integer(row[c[2]]));
    if (s.station.empty()) {
      s.station = row[c[0]];
      s.t0 = t;
      s.interval_hours = hours;
    } else if (hours != s.interval_hours || t != s.interval_start(s.size())) {
      tab.fail();  // records of one station must be contiguous and in order
    }
    s.pickups.push_back(tab.integer(row[c[3]]));
    s.dropoffs.push_back(tab.integer(row[c[4]]));
  }
  return out;
}

void write_externals(const std::filesystem::path& path, const ExternalSeries& ext) {
  auto out = open_out(path);
  out << "interval_start\tinterval_hours\ttemperature_f\twind_mph\tprecipitation_in\tholiday_flag\n";
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const auto& v = ext.values[i];
    out << format_civil_time(ext.t0.plus_hours(static_cast<std::int64_t>(i) * ext.interval_hours)) << '\t'
        << ext.interval_hours << '\t' << num(v[0]) << '\t' << num(v[1]) << '\t' << num(v[2]) << '\t'
        << num(v[3]) << '\n';
  }
}

ExternalSeries read_externals(const std::filesystem::path& path) {
  Table tab(path);
  const std::size_t c[] = {tab.col("interval_start"), tab.col("interval_hours"), tab.col("temperature_f"),
                           tab.col("wind_mph"), tab.col("precipitation_in"), tab.col("holiday_flag")};
  ExternalSeries out;
  std::vector<std::string> row;
  while (tab.reader->next(row)) {
    if (row.size() < 6) tab.fail();
    const CivilTime t = tab.time(row[c[0]]);
    const int hours = static_cast<int>(tab.integer(row[c[1]]));
    if (out.values.empty()) {
      out.t0 = t;
      out.interval_hours = hours;
    } else if (hours != out.interval_hours ||
               t != out.t0.plus_hours(static_cast<std::int64_t>(out.size()) * hours)) {
      tab.fail();
    }
    out.values.push_back(
        {tab.real(row[c[2]]), tab.real(row[c[3]]), tab.real(row[c[4]]), tab.real(row[c[5]])});
  }
  return out;
}

void write_stations(const std::filesystem::path& path, const StationRegistry& registry) {
  auto out = open_out(path);
  out << "station\tlat\tlon\tstatus\tfirst_usage\tlast_usage\tpickups\tdropoffs\n";
  for (const auto& [id, s] : registry.stations) {
    out << id << '\t' << num(s.coord.lat) << '\t' << num(s.coord.lon) << '\t' << status_name(s.status) << '\t'
        << format_civil_time(s.first_usage) << '\t' << format_civil_time(s.last_usage) << '\t' << s.pickups
        << '\t' << s.dropoffs << '\n';
  }
}

StationRegistry read_stations(const std::filesystem::path& path) {
  Table tab(path);
  const std::size_t c[] = {tab.col("station"),    tab.col("lat"),        tab.col("lon"),
                           tab.col("status"),     tab.col("first_usage"), tab.col("last_usage"),
                           tab.col("pickups"),    tab.col("dropoffs")};
  StationRegistry reg;
  std::vector<std::string> row;
  while (tab.reader->next(row)) {
    if (row.size() < 8) tab.fail();
    StationInfo s;
    s.id = row[c[0]];
    s.coord = {tab.real(row[c[1]]), tab.real(row[c[2]])};
    auto st = parse_status(row[c[3]]);
    if (!st) tab.fail();
    s.status = *st;
    s.first_usage = tab.time(row[c[4]]);
    s.last_usage = tab.time(row[c[5]]);
    s.pickups = static_cast<std::size_t>(tab.integer(row[c[6]]));
    s.dropoffs = static_cast<std::size_t>(tab.integer(row[c[7]]));
    reg.stations[s.id] = s;
  }
  return reg;
}

void write_pois(const std::filesystem::path& path, const PoiCatalog& pois, const CityConfig& city) {
  auto out = open_out(path);
  out << "channel\tcategory\tlat\tlon\n";
  for (const auto& p : pois.pois) {
    out << p.channel << '\t' << city.poi_categories.at(p.channel) << '\t' << num(p.coord.lat) << '\t'
        << num(p.coord.lon) << '\n';
  }
}

PoiCatalog read_pois(const std::filesystem::path& path) {
  Table tab(path);
  const std::size_t c[] = {tab.col("channel"), tab.col("lat"), tab.col("lon")};
  PoiCatalog out;
  std::vector<std::string> row;
  while (tab.reader->next(row)) {
    if (row.size() < 4) tab.fail();
    out.pois.push_back(Poi{static_cast<std::size_t>(tab.integer(row[c[0]])),
                           LatLon{tab.real(row[c[1]]), tab.real(row[c[2]])}});
  }
  return out;
}

}  // namespace atcor::ingest
