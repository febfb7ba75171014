#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/ingest/city_config.hpp"
#include "atcor/ingest/columnar.hpp"
#include "atcor/ingest/external.hpp"
#include "atcor/ingest/pois.hpp"
#include "atcor/ingest/stations.hpp"
#include "atcor/ingest/trips.hpp"
#include "atcor/ingest/usage.hpp"

namespace fs = std::filesystem;
using namespace atcor;
using namespace atcor::ingest;

namespace {

TripRecord trip(const std::string& from, const std::string& to, CivilTime t, LatLon a = {40.75, -73.98},
                LatLon b = {40.76, -73.97}) {
  return TripRecord{t, t.plus_seconds(600), from, to, a, b};
}

}  // namespace

TEST_CASE("civil time parses every accepted layout") {
  CHECK(parse_civil_time("2019-07-04 08:15:30") == make_time(2019, 7, 4, 8, 15, 30));
  CHECK(parse_civil_time("2019-07-04 08:15:30.1234") == make_time(2019, 7, 4, 8, 15, 30));
  CHECK(parse_civil_time("2019-07-04T08:15:30") == make_time(2019, 7, 4, 8, 15, 30));
  CHECK(parse_civil_time("2019-07-04 08:15") == make_time(2019, 7, 4, 8, 15));
  CHECK(parse_civil_time("2019-07-04") == make_time(2019, 7, 4));
  CHECK(parse_civil_time("7/4/2019 8:15") == make_time(2019, 7, 4, 8, 15));
  CHECK_FALSE(parse_civil_time("2019-13-04").has_value());
  CHECK_FALSE(parse_civil_time("yesterday").has_value());
  CHECK(format_civil_time(make_time(2019, 3, 10, 2, 30)) == "2019-03-10 02:30:00");
  CHECK(weekday(day_index(make_time(2019, 7, 4))) == 3);  // a Thursday
  for (std::int64_t d = -800; d < 800; d += 7) CHECK(days_from_civil(civil_from_days(d)) == d);
  const auto span = parse_span("2019-06-01..2019-07-01");
  REQUIRE(span.has_value());
  CHECK(span->seconds() == 30 * kSecondsPerDay);
}

TEST_CASE("quoted csv fields keep delimiters and escaped quotes") {
  const auto f = split_fields(R"(a,"b,c","say ""hi""",)");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "say \"hi\"");
  CHECK(f[3].empty());
}

TEST_CASE("trip parsing counts each kind of malformed row") {
  const auto city = builtin_city("nyc");
  std::istringstream in(
      "\"tripduration\",\"starttime\",\"stoptime\",\"start station id\",\"start station latitude\","
      "\"start station longitude\",\"end station id\",\"end station latitude\",\"end station longitude\"\n"
      "600,2019-07-01 08:00:00.0000,2019-07-01 08:10:00.0000,72,40.76,-73.99,79,40.72,-74.00\n"
      "600,not a time,2019-07-01 08:10:00,72,40.76,-73.99,79,40.72,-74.00\n"
      "600,2019-07-01 09:00:00,2019-07-01 08:10:00,72,40.76,-73.99,79,40.72,-74.00\n"
      "600,2019-07-01 08:00:00,2019-07-01 08:10:00,,40.76,-73.99,79,40.72,-74.00\n"
      "600,2019-07-01 08:00:00,2019-07-01 08:10:00,72,north,-73.99,79,40.72,-74.00\n"
      "600,2019-07-01 08:00:00,2019-07-01 08:10:00,72,0,0,79,40.72,-74.00\n"
      "600,2019-07-01 08:00:00\n");
  const auto r = parse_trips(in, city);
  CHECK(r.trips.size() == 1);
  CHECK(r.trips[0].start_station == "72");
  CHECK(r.stats.rows == 7);
  CHECK(r.stats.malformed == 6);
  CHECK(r.stats.bad_time == 2);
  CHECK(r.stats.reversed_time == 1);
  CHECK(r.stats.missing_station == 1);
  CHECK(r.stats.bad_coord == 1);
  CHECK(r.stats.out_of_bounds == 1);
  CHECK(r.stats.over_threshold);

  std::istringstream wrong("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(parse_trips(wrong, city), IngestError);
  CHECK_THROWS_AS(parse_trips(fs::path("/nonexistent/trips.csv"), city), IngestError);
}

TEST_CASE("relocated stations split, nearby coordinates merge") {
  const CivilTime t = make_time(2019, 6, 1, 8);
  const LatLon a{40.75, -73.98};
  const LatLon near = offset_position(a, 20.0, 0.0), far = offset_position(a, 400.0, 0.0);
  std::vector<TripRecord> trips{trip("s", "x", t, a), trip("s", "x", t.plus_hours(1), near),
                                trip("s", "x", t.plus_hours(2), far)};
  CHECK(resolve_station_locations(trips, 50.0) == 1);
  CHECK(trips[1].start_station == "s");
  CHECK(trips[1].start_coord == a);
  CHECK(trips[2].start_station == "s~1");
}

TEST_CASE("stations are classified by daily activity and history") {
  const TimeSpan window{make_time(2019, 6, 10), make_time(2019, 6, 13)};
  std::vector<TripRecord> trips;
  for (int d = 0; d < 13; ++d) trips.push_back(trip("daily", "sink", make_time(2019, 6, 1 + d, 9)));
  trips.push_back(trip("gap", "sink", make_time(2019, 6, 10, 9)));
  trips.push_back(trip("gap", "sink", make_time(2019, 6, 12, 9)));
  trips.push_back(trip("fresh", "sink", make_time(2019, 6, 11, 9)));
  std::sort(trips.begin(), trips.end(), [](const auto& x, const auto& y) { return x.start_time < y.start_time; });
  ClassifyOptions opt;
  opt.history_days = 5;
  const auto reg = classify_stations(trips, window, opt);
  CHECK(reg.find("daily")->status == StationStatus::active_existing);
  CHECK(reg.find("gap")->status == StationStatus::new_station);  // no use in the 5 days before
  CHECK(reg.find("fresh")->status == StationStatus::new_station);
  CHECK(reg.find("fresh")->first_usage == make_time(2019, 6, 11, 9));
  opt.history_days = 30;
  CHECK_THROWS_AS(classify_stations(trips, window, opt), SpanError);
  opt.history_days = 0;
  const auto plain = classify_stations(trips, window, opt);
  CHECK(plain.find("gap")->status == StationStatus::other);
  CHECK(plain.find("sink")->status == StationStatus::active_existing);
}

TEST_CASE("usage binning counts pick-ups at starts and drop-offs at ends") {
  const CivilTime t0 = make_time(2019, 6, 1);
  std::vector<TripRecord> trips{trip("a", "b", t0.plus_seconds(3500)), trip("b", "a", t0.plus_seconds(3700)),
                                trip("a", "a", t0.plus_hours(5))};
  const auto reg = collect_stations(trips);
  const auto u = bin_usage(trips, reg, "a", 4, {t0, t0.plus_hours(8)});
  CHECK(u.pickups == std::vector<std::int64_t>{1, 1});
  CHECK(u.dropoffs == std::vector<std::int64_t>{1, 1});
  const std::vector<std::string> ids{"a", "b"};
  const auto all = bin_usage_all(trips, ids, 1, {t0, t0.plus_hours(8)});
  CHECK(all.at("b").pickups[1] == 1);
  CHECK(all.at("b").dropoffs[0] == 0);
  CHECK(all.at("b").dropoffs[1] == 1);
  CHECK_THROWS_AS(bin_usage(trips, reg, "zzz", 1, {t0, t0.plus_hours(8)}), Error);
  CHECK_THROWS_AS(interval_count({t0, t0.plus_hours(7)}, 4), SpanError);
}

TEST_CASE("externals average, sum rain, flag weekends and fill short gaps") {
  auto city = builtin_city("nyc");
  city.weather_fill_limit = 1;
  const CivilTime t0 = make_time(2019, 7, 5);  // Friday
  std::vector<WeatherReading> w{{t0, 70.0, 4.0, 0.1},
                                {t0.plus_seconds(1800), 72.0, 6.0, 0.2},
                                {t0.plus_hours(2), 60.0, 1.0, 0.0}};
  const auto e = load_external(w, city, {t0, t0.plus_hours(3)}, 1);
  REQUIRE(e.size() == 3);
  CHECK(e.values[0][0] == 71.0);
  CHECK(e.values[0][1] == 5.0);
  CHECK(e.values[0][2] == doctest::Approx(0.3));
  CHECK(e.values[1] == e.values[0]);
  CHECK(e.values[2][0] == 60.0);
  CHECK(e.values[0][3] == 0.0);
  CHECK(holiday_flag(make_time(2019, 7, 6, 8), city) == 1.0);
  CHECK(holiday_flag(make_time(2019, 7, 4, 8), city) == 1.0);
  const std::vector<WeatherReading> sparse{{t0, 70.0, 4.0, 0.0}, {t0.plus_hours(3), 70.0, 4.0, 0.0}};
  CHECK_THROWS_AS(load_external(sparse, city, {t0, t0.plus_hours(4)}, 1), IngestError);
}

TEST_CASE("poi labels map to channels with a fallback") {
  const auto city = builtin_city("nyc");
  std::istringstream in("category,lat,lon\nresidential,40.7,-73.9\n\"commercial\",40.71,-73.91\nspaceport,40.72,-73.92\n");
  const auto p = parse_pois(in, city);
  REQUIRE(p.pois.size() == 3);
  CHECK(p.pois[0].channel == 0);
  CHECK(p.pois[1].channel == city.poi_channel_of("commercial"));
  CHECK(p.pois[2].channel == city.poi_channel_of("others"));
  CHECK(p.unknown_labels == 1);
}

TEST_CASE("city configs and canonical tables round-trip") {
  const auto dir = fs::temp_directory_path() / "atcor_unit_ingest";
  fs::create_directories(dir);
  for (const auto& id : builtin_city_ids()) {
    const auto c = builtin_city(id);
    {
      std::ofstream out(dir / (id + ".json"));
      out << city_config_json(c);
    }
    const auto back = load_city_config(dir / (id + ".json"));
    CHECK(back.schema.start_time == c.schema.start_time);
    CHECK(back.poi_categories == c.poi_categories);
    CHECK(back.holidays == c.holidays);
    CHECK(back.interval_hours == c.interval_hours);
  }
  CHECK(builtin_city("la").interval_hours == 4);
  CHECK_THROWS_AS(builtin_city("atlantis"), ConfigError);

  const CivilTime t0 = make_time(2019, 6, 1);
  std::vector<TripRecord> trips{trip("a", "b", t0), trip("b", "a", t0.plus_hours(1))};
  write_trips(dir / "trips.tsv", trips);
  CHECK(read_trips(dir / "trips.tsv") == trips);

  auto reg = collect_stations(trips);
  reg.stations["a"].status = StationStatus::active_existing;
  write_stations(dir / "stations.tsv", reg);
  const auto reg2 = read_stations(dir / "stations.tsv");
  CHECK(reg2.find("a")->status == StationStatus::active_existing);
  CHECK(reg2.find("b")->coord == reg.find("b")->coord);

  ExternalSeries ext{t0, 1, {{70.5, 3.25, 0.0, 1.0}, {71.0, 2.0, 0.125, 0.0}}};
  write_externals(dir / "ext.tsv", ext);
  const auto ext2 = read_externals(dir / "ext.tsv");
  CHECK(ext2.values == ext.values);
  CHECK(ext2.t0 == t0);
  fs::remove_all(dir);
}
