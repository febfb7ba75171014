#pragma once

#include <cstdint>
#include <string>

#include "atcor/model/cells.hpp"
#include "atcor/model/forecaster.hpp"

namespace atcor::model {

enum class RecurrentKind { rnn, lstm, gru };

std::string_view kind_name(RecurrentKind k);

struct BaselineConfig {
  RecurrentKind kind = RecurrentKind::lstm;
  int hidden = 64;
  int lookback = 24;
  double dropout = 0.5;
  bool usage_scaling = true;  // recorded only; the data layer divides usage
  std::uint64_t seed = 0;

  void validate() const;
  std::string fingerprint() const;
  static BaselineConfig from_fingerprint(const std::string& text);
};

// Recurrent net over x_t = [L_t; ex_t] for the lookback steps; the last
// hidden state goes through dropout and an affine map to two outputs. No
// heatmaps, CNN or attention.
class RecurrentBaseline final : public Forecaster {
 public:
  explicit RecurrentBaseline(BaselineConfig config);

  const BaselineConfig& config() const { return cfg_; }
  std::string scheme() const override { return std::string(kind_name(cfg_.kind)); }
  int lookback() const override { return cfg_.lookback; }
  std::string fingerprint() const override { return cfg_.fingerprint(); }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::unique_ptr<Workspace> workspace() const override;
  Usage forward(const InputWindow& in, Workspace& ws, Rng* rng) const override;
  void backward(const InputWindow& in, Workspace& ws, const Usage& dout, std::vector<double>& grad) const override;

 private:
  BaselineConfig cfg_;
  ParamSet params_;
  std::size_t input_ = 2 + ingest::kExternalDim;
  std::size_t w_, b_, w2_ = 0, b2_ = 0, out_w_, out_b_, ex_scale_;
};

// y_hat = L at the last lookback step.
class Persistence final : public Forecaster {
 public:
  explicit Persistence(int lookback = 24) : lookback_(lookback) {}
  std::string scheme() const override { return "persistence"; }
  int lookback() const override { return lookback_; }
  std::string fingerprint() const override;
  bool trainable() const override { return false; }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::unique_ptr<Workspace> workspace() const override { return std::make_unique<Workspace>(); }
  Usage forward(const InputWindow& in, Workspace& ws, Rng* rng) const override;
  void backward(const InputWindow&, Workspace&, const Usage&, std::vector<double>&) const override {}

 private:
  int lookback_;
  ParamSet params_;
};

}  // namespace atcor::model
