#include "atcor/ingest/external.hpp"

#include <algorithm>
#include <fstream>

#include "atcor/common/csv.hpp"
#include "atcor/common/error.hpp"
#include "atcor/ingest/usage.hpp"

namespace atcor::ingest {

std::vector<WeatherReading> parse_weather(std::istream& in, const std::string& source_name) {
  DelimitedReader reader(in);
  std::vector<WeatherReading> out;
  if (reader.header().empty()) return out;
  const char* names[] = {"timestamp", "temperature_f", "wind_mph", "precipitation_in"};
  std::size_t col[4];
  for (int i = 0; i < 4; ++i) {
    auto c = reader.column(names[i]);
    if (!c) throw IngestError(source_name + ": weather file lacks column '" + names[i] + "'");
    col[i] = *c;
  }
  std::vector<std::string> row;
  while (reader.next(row)) {
    auto bad = [&] {
      return IngestError(source_name + ":" + std::to_string(reader.line_number()) + ": malformed weather row");
    };
    if (row.size() <= *std::max_element(std::begin(col), std::end(col))) throw bad();
    auto t = parse_civil_time(row[col[0]]);
    auto temp = parse_double(row[col[1]]);
    auto wind = parse_double(row[col[2]]);
    auto prec = parse_double(row[col[3]]);
    if (!t || !temp || !wind || !prec) throw bad();
    out.push_back(WeatherReading{*t, *temp, *wind, *prec});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

std::vector<WeatherReading> parse_weather(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read weather file " + path.string());
  return parse_weather(in, path.string());
}

double holiday_flag(CivilTime interval_start, const CityConfig& city) {
  const auto day = day_index(interval_start);
  return (is_weekend_day(day) || city.is_holiday(civil_from_days(day))) ? 1.0 : 0.0;
}

ExternalSeries load_external(std::span<const WeatherReading> readings, const CityConfig& city,
                             const TimeSpan& span, int interval_hours) {
  const std::size_t n = interval_count(span, interval_hours);
  const std::int64_t len = interval_hours * kSecondsPerHour;
  ExternalSeries out;
  out.t0 = span.begin;
  out.interval_hours = interval_hours;
  out.values.assign(n, ExternalVector{0, 0, 0, 0});

  std::vector<double> temp(n, 0.0), wind(n, 0.0), prec(n, 0.0);
  std::vector<int> count(n, 0);
  for (const auto& r : readings) {
    if (!span.contains(r.time)) continue;
    const auto slot = static_cast<std::size_t>((r.time.seconds - span.begin.seconds) / len);
    temp[slot] += r.temperature_f;
    wind[slot] += r.wind_mph;
    prec[slot] += r.precipitation_in;
    ++count[slot];
  }

  int gap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const CivilTime start = span.begin.plus_seconds(static_cast<std::int64_t>(i) * len);
    auto& v = out.values[i];
    if (count[i] > 0) {
      v = {temp[i] / count[i], wind[i] / count[i], prec[i], 0.0};
      gap = 0;
    } else {
      ++gap;
      if (i == 0 || gap > city.weather_fill_limit) {
        throw IngestError("weather data missing for interval starting " + format_civil_time(start) +
                          " (gap of " + std::to_string(gap) + " intervals exceeds fill limit " +
                          std::to_string(city.weather_fill_limit) + ")");
      }
      v = out.values[i - 1];
    }
    v[3] = holiday_flag(start, city);
  }
  return out;
}

}  // namespace atcor::ingest
