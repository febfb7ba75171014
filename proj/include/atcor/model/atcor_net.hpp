#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atcor/model/attention.hpp"
#include "atcor/model/cells.hpp"
#include "atcor/model/cnn.hpp"
#include "atcor/model/forecaster.hpp"

namespace atcor::model {

enum class DecoderInit { encoder_final, zeros };

struct ModelConfig {
  int grid_rows = 11;
  int grid_cols = 11;
  std::vector<std::string> channel_names;  // P entries
  std::vector<ConvSpec> convs{{3, 3, 256}, {3, 3, 128}, {2, 2, 64}};
  int hidden = 1024;
  int layers = 1;
  int lookback = 24;
  bool shared_candidate = false;  // candidate reuses the input-gate weights
  DecoderInit decoder_init = DecoderInit::encoder_final;
  bool encoder_externals = false;
  double dropout = 0.5;
  bool heatmap_scaling = true;
  bool usage_scaling = true;
  bool zero_readout = false;
  std::uint64_t seed = 0;

  int channels() const { return static_cast<int>(channel_names.size()); }
  std::size_t heatmap_size() const {
    return static_cast<std::size_t>(grid_rows) * static_cast<std::size_t>(grid_cols) * channel_names.size();
  }
  // Throws ConfigError on inconsistent fields.
  void validate() const;
  std::string fingerprint() const;
  // Inverse of fingerprint(); throws ConfigError on unknown or missing keys.
  static ModelConfig from_fingerprint(const std::string& text);
};

std::map<std::string, std::string> parse_fingerprint(const std::string& text);

// CNN over each heatmap -> x_t = [cnn; L_t (; ex_t)] -> LSTM encoder over
// lookback steps -> temporal attention -> one decoder LSTM step on
// [context; ex_target] -> dropout -> affine to (pick-ups, drop-offs).
class AtcorNet final : public Forecaster {
 public:
  explicit AtcorNet(ModelConfig config);

  const ModelConfig& config() const { return cfg_; }
  std::string scheme() const override { return "atcor"; }
  int lookback() const override { return cfg_.lookback; }
  std::string fingerprint() const override { return cfg_.fingerprint(); }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::unique_ptr<Workspace> workspace() const override;
  Usage forward(const InputWindow& in, Workspace& ws, Rng* rng) const override;
  void backward(const InputWindow& in, Workspace& ws, const Usage& dout, std::vector<double>& grad) const override;

  // CNN alone on one (unscaled, normalized) heatmap.
  double cnn_feature(const double* heatmap, CnnCache& cache) const;
  void cnn_feature_backward(const CnnCache& cache, double dout, std::vector<double>& grad) const;
  const std::vector<ConvLayerShape>& cnn_layers() const { return layers_; }
  std::size_t encoder_input() const { return enc_.input; }

  // Attention weights of the last forward on `ws`.
  const std::vector<double>& attention_weights(const Workspace& ws) const;

 private:
  CnnWeights cnn_weights() const;
  CnnGrads cnn_grads(std::vector<double>& grad) const;
  void init_weights();

  ModelConfig cfg_;
  ParamSet params_;
  std::vector<ConvLayerShape> layers_;
  std::size_t flat_ = 0;
  LstmShape enc_;
  LstmShape dec_;
  std::vector<std::size_t> conv_w_, conv_b_;
  std::size_t fc_w_, fc_b_, enc_w_, enc_b_, att_v_, att_wa_, att_ua_, att_ba_, dec_w_, dec_b_, out_w_, out_b_,
      hm_scale_, ex_scale_;
};

}  // namespace atcor::model
