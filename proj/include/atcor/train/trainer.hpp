#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atcor/model/forecaster.hpp"
#include "atcor/train/samples.hpp"

namespace atcor::train {

enum class Optimizer { adam, sgd };

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 128;
  int epochs = 5000;
  Optimizer optimizer = Optimizer::adam;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  int cluster = 0;
  double monitor_fraction = 0.1;  // tail of the training span held out for monitoring
  int monitor_every = 100;
  bool early_stop = false;        // restore the best monitored parameters at the end
  int finite_check_every = 100;
  int threads = 1;
  // Where the last finite parameters go when training diverges.
  std::filesystem::path divergence_checkpoint;

  void validate() const;
  // key=value lines, prefixed "train."
  std::string fingerprint() const;
};

struct TrainResult {
  std::vector<double> loss;                      // batch loss per epoch, before that epoch's update
  std::vector<std::pair<int, double>> monitor;   // (epoch, monitor-split loss)
  int epochs_run = 0;
  int best_epoch = -1;
};

// Half the mean squared error over both outputs and the batch, in scaled
// units: sum (y_hat - y)^2 / (2 B). Returns the loss and accumulates grad.
double batch_loss(const model::Forecaster& model, const SeriesStore& store, std::span<const Sample> batch,
                  std::vector<double>* grad, std::uint64_t dropout_seed, int threads = 1);

// Mean loss over samples without dropout.
double evaluate_loss(const model::Forecaster& model, const SeriesStore& store, std::span<const Sample> samples);

// Each epoch reshuffles the training samples and takes the first batch_size
// of them (all of them when fewer), computes the loss, clips the gradient
// and takes one optimizer step. Deterministic given config.seed and the
// thread count. On a non-finite loss, gradient or parameter the last
// finite parameters are checkpointed and DivergenceError is thrown.
TrainResult train_model(model::Forecaster& model, const SeriesStore& store, std::span<const Sample> train_samples,
                        std::span<const Sample> monitor_samples, const TrainConfig& config,
                        const std::function<void(int epoch, double loss)>& progress = {});

void write_loss_trace(const std::filesystem::path& path, const TrainResult& result);

}  // namespace atcor::train
