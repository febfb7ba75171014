#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/common/geo.hpp"
#include "atcor/ingest/city_config.hpp"
#include "atcor/ingest/external.hpp"
#include "atcor/ingest/trips.hpp"
#include "atcor/pipeline/stages.hpp"

// A generated bike-share city in the raw public-data dialects, used where
// the real trip archives are not available.
namespace atcor::synth {

struct SynthConfig {
  std::string city = "nyc";  // built-in dialect the files are written in
  std::uint64_t seed = 7;
  CivilDate start{2019, 3, 15};
  int days = 170;
  LatLon center{40.735, -73.990};
  int rows = 11;  // existing stations on a jittered rows x cols lattice
  int cols = 13;
  double spacing_m = 450.0;
  double mean_rate = 2.5;  // mean pick-ups per station-hour before modulation
  int new_stations = 10;
  CivilDate new_first{2019, 5, 6};  // new stations open in [new_first, new_last]
  CivilDate new_last{2019, 7, 20};
  bool clone_fixture = true;  // one new station copies its nearest neighbour's demand
  double rain_factor = 0.3;   // demand multiplier while raining
  double latent_sigma = 0.12; // hourly innovation of the regional demand factor
  double latent_phi = 0.92;
  double region_m = 1500.0;   // side of the square regions sharing a latent factor
  int pois_per_station = 12;
};

enum class Land { residential, commercial, leisure };

struct PlantedStation {
  std::string id;
  LatLon coord;
  Land land = Land::residential;
  double base = 0.0;      // pick-ups per hour before modulation
  bool is_new = false;
  CivilTime opens;        // first hour demand is generated
  std::string clone_of;   // non-empty for the clone fixture
};

struct PlantedPoi {
  std::string category;
  LatLon coord;
};

struct SyntheticCity {
  ingest::CityConfig config;
  std::vector<PlantedStation> stations;
  std::vector<ingest::TripRecord> trips;  // sorted by start time
  std::vector<ingest::WeatherReading> weather;
  std::vector<PlantedPoi> pois;
};

SyntheticCity generate_city(const SynthConfig& config);

// The same result ingest_city gives for the written files.
pipeline::CityData to_city_data(const SyntheticCity& city);

struct WrittenFiles {
  std::filesystem::path city_config;
  std::vector<std::filesystem::path> trip_files;  // one per month
  std::filesystem::path weather;
  std::filesystem::path pois;
  std::filesystem::path holidays;
  std::filesystem::path stations;  // planted truth, for inspection
};

// Trip CSVs in the city's schema (one per calendar month), weather and POI
// CSVs, a holiday file and a city config referencing it.
WrittenFiles write_city_files(const std::filesystem::path& dir, const SyntheticCity& city);

}  // namespace atcor::synth
