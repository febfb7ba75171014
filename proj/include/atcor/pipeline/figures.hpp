#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "atcor/evaluate/report.hpp"
#include "atcor/pipeline/stages.hpp"

namespace atcor::pipeline {

// Prediction-vs-truth curves for up to `stations` stations of the AtCoR
// report (first week of targets), drawn against the other schemes' reports.
std::vector<std::filesystem::path> write_prediction_plots(const std::filesystem::path& dir,
                                                          std::span<const evaluate::EvalReport> reports,
                                                          std::size_t stations = 3);

// Exploratory plots: stations per month, POI counts around studied
// stations, daily usage against temperature / precipitation / wind, trip
// distance histogram and one regional pick-up heatmap.
std::vector<std::filesystem::path> write_exploratory_plots(const std::filesystem::path& dir, const CityData& data,
                                                           const Features& features, const Study& study);

}  // namespace atcor::pipeline
