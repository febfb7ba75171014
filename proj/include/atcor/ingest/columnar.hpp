#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/ingest/external.hpp"
#include "atcor/ingest/pois.hpp"
#include "atcor/ingest/stations.hpp"
#include "atcor/ingest/trips.hpp"
#include "atcor/ingest/usage.hpp"

// Tab-separated canonical files written by `atcor ingest`: one header line,
// one record per line. Field-by-field layouts are in docs/formats.md.
namespace atcor::ingest {

void write_trips(const std::filesystem::path& path, std::span<const TripRecord> trips);
std::vector<TripRecord> read_trips(const std::filesystem::path& path);

void write_usage(const std::filesystem::path& path, const std::map<std::string, UsageSeries>& series);
std::map<std::string, UsageSeries> read_usage(const std::filesystem::path& path);

void write_externals(const std::filesystem::path& path, const ExternalSeries& ext);
ExternalSeries read_externals(const std::filesystem::path& path);

void write_stations(const std::filesystem::path& path, const StationRegistry& registry);
StationRegistry read_stations(const std::filesystem::path& path);

void write_pois(const std::filesystem::path& path, const PoiCatalog& pois, const CityConfig& city);
PoiCatalog read_pois(const std::filesystem::path& path);

}  // namespace atcor::ingest
