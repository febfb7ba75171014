#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/civil_time.hpp"
#include "atcor/evaluate/metrics.hpp"

namespace atcor::evaluate {

struct StationMetrics {
  std::string station;
  int cluster = 0;
  ErrorSums pickups;
  ErrorSums dropoffs;
};

// Truth and clamped prediction per target interval for one station.
struct PredictionTrace {
  std::string station;
  CivilTime t0;  // first target interval
  int interval_hours = 1;
  std::vector<double> truth_pickups, truth_dropoffs;
  std::vector<double> pred_pickups, pred_dropoffs;
};

struct EvalReport {
  std::string scheme;
  std::string city;
  std::string protocol;  // existing | new | ablation_with_virtual | ablation_without_virtual
  std::vector<StationMetrics> stations;
  ErrorSums pickups;
  ErrorSums dropoffs;
  // Protocol windows, sample-set hash, fingerprints per cluster, ...
  std::map<std::string, std::string> metadata;
  std::vector<PredictionTrace> traces;

  std::size_t predictions() const { return pickups.n; }
};

// Pooled sums recomputed from the per-station sums.
ErrorSums pooled_pickups(const EvalReport& r);
ErrorSums pooled_dropoffs(const EvalReport& r);

// Scheme columns of the comparison tables, with the two external methods
// printed as "not implemented".
std::string existing_table(std::span<const EvalReport> reports);
std::string new_station_table(std::span<const EvalReport> reports);
std::string ablation_table(const EvalReport& with_virtual, const EvalReport& without_virtual);

// Machine-readable records: one "[report]" block per report with key=value
// lines (metrics, metadata, then per-station metrics).
std::string report_records(std::span<const EvalReport> reports);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace atcor::evaluate
