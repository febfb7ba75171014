#include "atcor/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "atcor/common/error.hpp"
#include "atcor/common/log.hpp"
#include "atcor/common/rng.hpp"
#include "atcor/model/checkpoint.hpp"

namespace atcor::train {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

bool finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Loss and gradient over batch[lo, hi) into grad.
double chunk_loss(const model::Forecaster& model, const SeriesStore& store, std::span<const Sample> batch,
                  std::size_t lo, std::size_t hi, std::vector<double>* grad, std::uint64_t dropout_seed,
                  double inv_b) {
  auto ws = model.workspace();
  const int T = model.lookback();
  double loss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto w = window_of(store, batch[i], T);
    const auto y = target_of(store, batch[i], T);
    Rng rng(splitmix(dropout_seed ^ splitmix(i)));
    const auto yh = model.forward(w, *ws, grad ? &rng : nullptr);
    const model::Usage dout{(yh[0] - y[0]) * inv_b, (yh[1] - y[1]) * inv_b};
    loss += 0.5 * ((yh[0] - y[0]) * (yh[0] - y[0]) + (yh[1] - y[1]) * (yh[1] - y[1])) * inv_b;
    if (grad) model.backward(w, *ws, dout, *grad);
  }
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(monitor_fraction >= 0.0 && monitor_fraction < 1.0)) throw ConfigError("monitor fraction must lie in [0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream o;
  o.precision(17);
  o << "train.learning_rate=" << learning_rate << "\n"
    << "train.batch_size=" << batch_size << "\n"
    << "train.epochs=" << epochs << "\n"
    << "train.optimizer=" << (optimizer == Optimizer::adam ? "adam" : "sgd") << "\n"
    << "train.clip_norm=" << clip_norm << "\n"
    << "train.seed=" << seed << "\n"
    << "train.cluster=" << cluster << "\n"
    << "train.monitor_fraction=" << monitor_fraction << "\n"
    << "train.early_stop=" << early_stop << "\n";
  return o.str();
}

double batch_loss(const model::Forecaster& model, const SeriesStore& store, std::span<const Sample> batch,
                  std::vector<double>* grad, std::uint64_t dropout_seed, int threads) {
  if (batch.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto n_threads = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(batch.size()))));
  if (n_threads == 1) return chunk_loss(model, store, batch, 0, batch.size(), grad, dropout_seed, inv_b);

  std::vector<double> losses(n_threads, 0.0);
  std::vector<std::vector<double>> grads(n_threads);
  std::vector<std::thread> pool;
  const std::size_t per = (batch.size() + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    const std::size_t lo = t * per, hi = std::min(batch.size(), lo + per);
    if (grad) grads[t].assign(grad->size(), 0.0);
    pool.emplace_back([&, t, lo, hi] {
      losses[t] = chunk_loss(model, store, batch, lo, hi, grad ? &grads[t] : nullptr, dropout_seed, inv_b);
    });
  }
  for (auto& th : pool) th.join();
  double loss = 0.0;
  for (std::size_t t = 0; t < n_threads; ++t) {
    loss += losses[t];
    if (grad)
      for (std::size_t i = 0; i < grad->size(); ++i) (*grad)[i] += grads[t][i];
  }
  return loss;
}

double evaluate_loss(const model::Forecaster& model, const SeriesStore& store, std::span<const Sample> samples) {
  return batch_loss(model, store, samples, nullptr, 0);
}

TrainResult train_model(model::Forecaster& model, const SeriesStore& store, std::span<const Sample> train_samples,
                        std::span<const Sample> monitor_samples, const TrainConfig& cfg,
                        const std::function<void(int, double)>& progress) {
  cfg.validate();
  if (train_samples.empty()) throw Error("no training samples");
  TrainResult res;
  if (!model.trainable()) return res;

  auto& params = model.params().values();
  const auto mask = model.params().trainable_mask();
  std::vector<double> grad(params.size()), m(params.size(), 0.0), v(params.size(), 0.0);
  std::vector<double> best;
  std::vector<double> last_good = params;  // refreshed at every finite check
  double best_monitor = std::numeric_limits<double>::infinity();
  std::vector<Sample> order(train_samples.begin(), train_samples.end());
  std::vector<Sample> batch;
  Rng rng(cfg.seed);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  auto diverge = [&](int epoch, const std::string& what) {
    if (!finite(params)) params = last_good;
    if (!cfg.divergence_checkpoint.empty()) {
      model::save_checkpoint(cfg.divergence_checkpoint, model,
                             {{"diverged_epoch", std::to_string(epoch)}, {"reason", what}});
    }
    throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (" + what + ")" +
                          (cfg.divergence_checkpoint.empty()
                               ? std::string()
                               : "; last finite parameters saved to " + cfg.divergence_checkpoint.string()));
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size());
    batch.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bs));
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = batch_loss(model, store, batch, &grad, rng.bits(), cfg.threads);
    if (!std::isfinite(loss)) diverge(epoch, "non-finite loss");
    double norm2 = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] *= mask[i];
      norm2 += grad[i] * grad[i];
    }
    if (!std::isfinite(norm2)) diverge(epoch, "non-finite gradient");
    res.loss.push_back(loss);
    if (progress) progress(epoch, loss);

    const double norm = std::sqrt(norm2);
    const double clip = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
    if (cfg.optimizer == Optimizer::adam) {
      const double t = epoch + 1;
      const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (mask[i] == 0.0) continue;
        const double g = grad[i] * clip;
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        params[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i] * clip * mask[i];
    }
    res.epochs_run = epoch + 1;

    if (cfg.finite_check_every > 0 && (epoch + 1) % cfg.finite_check_every == 0) {
      if (!finite(params)) diverge(epoch, "non-finite parameters");
      last_good = params;
    }
    const bool last = epoch + 1 == cfg.epochs;
    if (!monitor_samples.empty() && cfg.monitor_every > 0 && ((epoch + 1) % cfg.monitor_every == 0 || last)) {
      const double ml = evaluate_loss(model, store, monitor_samples);
      res.monitor.emplace_back(epoch + 1, ml);
      if (cfg.early_stop && ml < best_monitor) {
        best_monitor = ml;
        best = params;
        res.best_epoch = epoch + 1;
      }
    }
  }
  if (cfg.early_stop && !best.empty()) params = best;
  return res;
}

void write_loss_trace(const std::filesystem::path& path, const TrainResult& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch\tloss\tmonitor_loss\n";
  std::size_t mi = 0;
  char buf[64];
  for (std::size_t e = 0; e < result.loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", result.loss[e]);
    out << e << '\t' << buf << '\t';
    if (mi < result.monitor.size() && static_cast<std::size_t>(result.monitor[mi].first) == e + 1) {
      std::snprintf(buf, sizeof buf, "%.17g", result.monitor[mi].second);
      out << buf;
      ++mi;
    }
    out << '\n';
  }
}

}  // namespace atcor::train
