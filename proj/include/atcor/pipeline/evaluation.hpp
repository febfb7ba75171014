#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "atcor/evaluate/report.hpp"
#include "atcor/pipeline/stages.hpp"

namespace atcor::pipeline {

struct EvalContext {
  const CityData& data;
  const Features& features;
  const Experiment& experiment;
  const Study& study;
  const ModelBank& models;
  std::map<std::string, model::Usage> scales;  // training-span scales of active existing stations
};

// One-step predictions for every studied existing station whose targets lie
// in the test span. Predictions are unscaled and clamped at 0 before scoring.
std::vector<evaluate::EvalReport> eval_existing(const EvalContext& ctx, std::span<const std::string> schemes);

// New stations from their first usage for the protocol window (or the first
// `max_targets` intervals). Inputs before first usage are virtual usage
// from the neighbours, or zeros when `virtual_history` is false; observed
// usage after. The station scale is the omega-weighted neighbour scale.
std::vector<evaluate::EvalReport> eval_new(const EvalContext& ctx, std::span<const std::string> schemes,
                                           bool virtual_history = true, std::size_t max_targets = 0);

struct Ablation {
  evaluate::EvalReport with_virtual;
  evaluate::EvalReport without_virtual;
};

// First protocol.ablation_intervals targets with and without virtual history.
Ablation eval_ablation(const EvalContext& ctx, const std::string& scheme = "atcor");

}  // namespace atcor::pipeline
