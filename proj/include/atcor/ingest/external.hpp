#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/ingest/city_config.hpp"

namespace atcor::ingest {

// (temperature F, wind mph, precipitation in, holiday/weekend flag)
using ExternalVector = std::array<double, 4>;
inline constexpr std::size_t kExternalDim = 4;

struct ExternalSeries {
  CivilTime t0;
  int interval_hours = 1;
  std::vector<ExternalVector> values;

  std::size_t size() const { return values.size(); }
};

struct WeatherReading {
  CivilTime time;
  double temperature_f = 0.0;
  double wind_mph = 0.0;
  double precipitation_in = 0.0;
};

// CSV with header: timestamp,temperature_f,wind_mph,precipitation_in
std::vector<WeatherReading> parse_weather(std::istream& in, const std::string& source_name = "<stream>");
std::vector<WeatherReading> parse_weather(const std::filesystem::path& path);

// 1 when the interval's start date is a weekend or a configured holiday.
double holiday_flag(CivilTime interval_start, const CityConfig& city);

// One vector per interval of `span`: mean temperature and wind, summed
// precipitation over readings inside the interval. Empty intervals copy the
// previous interval for up to city.weather_fill_limit intervals; longer gaps
// (or a gap at the start) throw IngestError.
ExternalSeries load_external(std::span<const WeatherReading> readings, const CityConfig& city,
                             const TimeSpan& span, int interval_hours);

}  // namespace atcor::ingest
