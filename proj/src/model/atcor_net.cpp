#include "atcor/model/atcor_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "atcor/common/error.hpp"
#include "atcor/simd/kernels.hpp"

namespace atcor::model {

namespace {

std::string join(const std::vector<std::string>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + v[i];
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

struct AtcorWorkspace final : Workspace {
  std::vector<CnnCache> cnn;
  std::vector<double> scaled;  // one heatmap
  std::vector<double> x;       // lookback x encoder input
  std::vector<LstmStep> enc;
  std::vector<double> h_enc;   // lookback x d
  std::vector<double> s;       // decoder initial [h; c]
  AttentionStep att;
  std::vector<double> dec_in;
  LstmStep dec;
  std::vector<double> mask;    // dropout multipliers
  std::vector<double> h_out;
};

void uniform_fill(std::span<double> v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

}  // namespace

std::map<std::string, std::string> parse_fingerprint(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("fingerprint line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void ModelConfig::validate() const {
  if (grid_rows < 1 || grid_cols < 1) throw ConfigError("grid must be at least 1x1");
  if (channel_names.empty()) throw ConfigError("model needs at least one heatmap channel");
  if (hidden < 1) throw ConfigError("hidden size must be >= 1");
  if (layers != 1) throw ConfigError("only single-layer LSTMs are implemented (layers = " + std::to_string(layers) + ")");
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  CnnShape{grid_rows, grid_cols, channels(), convs}.layers();
}

std::string ModelConfig::fingerprint() const {
  std::vector<std::string> cv;
  for (const auto& c : convs)
    cv.push_back(std::to_string(c.kh) + "x" + std::to_string(c.kw) + "x" + std::to_string(c.out));
  std::ostringstream o;
  o << "scheme=atcor\n"
    << "grid=" << grid_rows << "x" << grid_cols << "\n"
    << "channels=" << join(channel_names, '|') << "\n"
    << "convs=" << join(cv, ',') << "\n"
    << "hidden=" << hidden << "\n"
    << "layers=" << layers << "\n"
    << "lookback=" << lookback << "\n"
    << "shared_candidate=" << shared_candidate << "\n"
    << "decoder_init=" << (decoder_init == DecoderInit::zeros ? "zeros" : "encoder_final") << "\n"
    << "encoder_externals=" << encoder_externals << "\n"
    << "dropout=" << fmt(dropout) << "\n"
    << "heatmap_scaling=" << (heatmap_scaling ? "channel_max_abs" : "none") << "\n"
    << "usage_scaling=" << (usage_scaling ? "station_max" : "none") << "\n"
    << "external_scaling=component_max\n"
    << "init=uniform_fan_in;conv_relu_gain;forget_bias_1\n"
    << "zero_readout=" << zero_readout << "\n"
    << "seed=" << seed << "\n";
  return o.str();
}

ModelConfig ModelConfig::from_fingerprint(const std::string& text) {
  auto kv = parse_fingerprint(text);
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError(std::string("fingerprint lacks ") + k);
    return it->second;
  };
  if (get("scheme") != "atcor") throw ConfigError("fingerprint is not an AtCoR model: " + get("scheme"));
  ModelConfig c;
  if (std::sscanf(get("grid").c_str(), "%dx%d", &c.grid_rows, &c.grid_cols) != 2) throw ConfigError("bad grid");
  c.channel_names = split(get("channels"), '|');
  c.convs.clear();
  for (const auto& s : split(get("convs"), ',')) {
    ConvSpec cs;
    if (std::sscanf(s.c_str(), "%dx%dx%d", &cs.kh, &cs.kw, &cs.out) != 3) throw ConfigError("bad conv spec " + s);
    c.convs.push_back(cs);
  }
  c.hidden = std::stoi(get("hidden"));
  c.layers = std::stoi(get("layers"));
  c.lookback = std::stoi(get("lookback"));
  c.shared_candidate = get("shared_candidate") == "1";
  c.decoder_init = get("decoder_init") == "zeros" ? DecoderInit::zeros : DecoderInit::encoder_final;
  c.encoder_externals = get("encoder_externals") == "1";
  c.dropout = std::stod(get("dropout"));
  c.heatmap_scaling = get("heatmap_scaling") != "none";
  c.usage_scaling = get("usage_scaling") != "none";
  c.zero_readout = get("zero_readout") == "1";
  c.seed = std::stoull(get("seed"));
  if (c.fingerprint() != text) throw ConfigError("fingerprint does not round-trip; unknown keys or formatting");
  return c;
}

AtcorNet::AtcorNet(ModelConfig config) : cfg_(std::move(config)) {
  cfg_.validate();
  CnnShape shape{cfg_.grid_rows, cfg_.grid_cols, cfg_.channels(), cfg_.convs};
  layers_ = shape.layers();
  flat_ = layers_.back().out_size();
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  enc_ = LstmShape{d, 3 + (cfg_.encoder_externals ? ingest::kExternalDim : 0), cfg_.shared_candidate};
  dec_ = LstmShape{d, d + ingest::kExternalDim, cfg_.shared_candidate};

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    const auto n = std::to_string(l + 1);
    conv_w_.push_back(params_.add("conv" + n + ".w", {static_cast<std::size_t>(s.out_c), static_cast<std::size_t>(s.kh),
                                                     static_cast<std::size_t>(s.kw), static_cast<std::size_t>(s.in_c)}));
    conv_b_.push_back(params_.add("conv" + n + ".b", {static_cast<std::size_t>(s.out_c)}));
  }
  fc_w_ = params_.add("cnn_fc.w", {flat_});
  fc_b_ = params_.add("cnn_fc.b", {1});
  enc_w_ = params_.add("enc.w", {enc_.gate_rows(), enc_.cols()});
  enc_b_ = params_.add("enc.b", {enc_.gate_rows()});
  att_v_ = params_.add("att.v", {d});
  att_wa_ = params_.add("att.w_a", {d, 2 * d});
  att_ua_ = params_.add("att.u_a", {d, d});
  att_ba_ = params_.add("att.b_a", {d});
  dec_w_ = params_.add("dec.w", {dec_.gate_rows(), dec_.cols()});
  dec_b_ = params_.add("dec.b", {dec_.gate_rows()});
  out_w_ = params_.add("out.w", {2, d});
  out_b_ = params_.add("out.b", {2});
  hm_scale_ = params_.add("hm_scale", {static_cast<std::size_t>(cfg_.channels())}, false);
  ex_scale_ = params_.add("ex_scale", {ingest::kExternalDim}, false);
  init_weights();
}

void AtcorNet::init_weights() {
  Rng rng(cfg_.seed);
  for (std::size_t l = 0; l < layers_.size(); ++l)
    uniform_fill(params_.view(conv_w_[l]), std::sqrt(6.0 / static_cast<double>(layers_[l].patch())), rng);
  uniform_fill(params_.view(fc_w_), 1.0 / std::sqrt(static_cast<double>(flat_)), rng);
  const double d = cfg_.hidden;
  uniform_fill(params_.view(enc_w_), 1.0 / std::sqrt(static_cast<double>(enc_.cols())), rng);
  uniform_fill(params_.view(att_v_), 1.0 / std::sqrt(d), rng);
  uniform_fill(params_.view(att_wa_), 1.0 / std::sqrt(2.0 * d), rng);
  uniform_fill(params_.view(att_ua_), 1.0 / std::sqrt(d), rng);
  uniform_fill(params_.view(dec_w_), 1.0 / std::sqrt(static_cast<double>(dec_.cols())), rng);
  if (!cfg_.zero_readout) uniform_fill(params_.view(out_w_), 1.0 / std::sqrt(d), rng);
  const auto h = static_cast<std::size_t>(cfg_.hidden);
  for (std::size_t j = 0; j < h; ++j) {
    params_.data(enc_b_)[h + j] = 1.0;
    params_.data(dec_b_)[h + j] = 1.0;
  }
  for (double& v : params_.view(hm_scale_)) v = 1.0;
  for (double& v : params_.view(ex_scale_)) v = 1.0;
}

CnnWeights AtcorNet::cnn_weights() const {
  CnnWeights w;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    w.w.push_back(params_.data(conv_w_[l]));
    w.b.push_back(params_.data(conv_b_[l]));
  }
  w.fc_w = params_.data(fc_w_);
  w.fc_b = params_.data(fc_b_);
  return w;
}

CnnGrads AtcorNet::cnn_grads(std::vector<double>& grad) const {
  CnnGrads g;
  auto at = [&](std::size_t b) { return grad.data() + params_.block(b).offset; };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    g.w.push_back(at(conv_w_[l]));
    g.b.push_back(at(conv_b_[l]));
  }
  g.fc_w = at(fc_w_);
  g.fc_b = at(fc_b_);
  return g;
}

double AtcorNet::cnn_feature(const double* heatmap, CnnCache& cache) const {
  const std::size_t n = cfg_.heatmap_size();
  const auto p = static_cast<std::size_t>(cfg_.channels());
  std::vector<double> scaled(heatmap, heatmap + n);
  if (cfg_.heatmap_scaling) {
    const double* s = params_.data(hm_scale_);
    for (std::size_t i = 0; i < n; ++i) scaled[i] /= s[i % p];
  }
  return cnn_forward(layers_, flat_, cnn_weights(), scaled.data(), cache);
}

void AtcorNet::cnn_feature_backward(const CnnCache& cache, double dout, std::vector<double>& grad) const {
  cnn_backward(layers_, flat_, cnn_weights(), cache, dout, cnn_grads(grad), nullptr);
}

std::unique_ptr<Workspace> AtcorNet::workspace() const { return std::make_unique<AtcorWorkspace>(); }

const std::vector<double>& AtcorNet::attention_weights(const Workspace& ws) const {
  return static_cast<const AtcorWorkspace&>(ws).att.gamma;
}

Usage AtcorNet::forward(const InputWindow& in, Workspace& base, Rng* rng) const {
  const std::size_t hm = cfg_.heatmap_size();
  check_window(in, cfg_.lookback, hm);
  auto& ws = static_cast<AtcorWorkspace&>(base);
  const auto T = static_cast<std::size_t>(cfg_.lookback);
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  const auto p = static_cast<std::size_t>(cfg_.channels());
  const std::size_t l = enc_.input;
  const double* hs = params_.data(hm_scale_);
  const double* es = params_.data(ex_scale_);
  const auto weights = cnn_weights();

  ws.cnn.resize(T);
  ws.scaled.resize(hm);
  ws.x.assign(T * l, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* h = in.heatmaps.data() + t * hm;
    for (std::size_t i = 0; i < hm; ++i) ws.scaled[i] = cfg_.heatmap_scaling ? h[i] / hs[i % p] : h[i];
    double* x = ws.x.data() + t * l;
    x[0] = cnn_forward(layers_, flat_, weights, ws.scaled.data(), ws.cnn[t]);
    x[1] = in.usage[t][0];
    x[2] = in.usage[t][1];
    if (cfg_.encoder_externals)
      for (std::size_t k = 0; k < ingest::kExternalDim; ++k) x[3 + k] = in.externals[t][k] / es[k];
  }

  ws.enc.resize(T);
  ws.h_enc.resize(T * d);
  std::vector<double> zeros(d, 0.0);
  const double* hp = zeros.data();
  const double* cp = zeros.data();
  for (std::size_t t = 0; t < T; ++t) {
    lstm_forward(enc_, params_.data(enc_w_), params_.data(enc_b_), ws.x.data() + t * l, hp, cp, ws.enc[t]);
    std::copy(ws.enc[t].h.begin(), ws.enc[t].h.end(), ws.h_enc.begin() + static_cast<std::ptrdiff_t>(t * d));
    hp = ws.enc[t].h.data();
    cp = ws.enc[t].c.data();
  }

  ws.s.assign(2 * d, 0.0);
  if (cfg_.decoder_init == DecoderInit::encoder_final) {
    std::copy(ws.enc[T - 1].h.begin(), ws.enc[T - 1].h.end(), ws.s.begin());
    std::copy(ws.enc[T - 1].c.begin(), ws.enc[T - 1].c.end(), ws.s.begin() + static_cast<std::ptrdiff_t>(d));
  }
  const AttentionWeights aw{params_.data(att_v_), params_.data(att_wa_), params_.data(att_ua_), params_.data(att_ba_)};
  attention_forward(d, T, aw, ws.s.data(), ws.h_enc.data(), ws.att);

  ws.dec_in.resize(d + ingest::kExternalDim);
  std::copy(ws.att.ctx.begin(), ws.att.ctx.end(), ws.dec_in.begin());
  for (std::size_t k = 0; k < ingest::kExternalDim; ++k) ws.dec_in[d + k] = in.externals[T][k] / es[k];
  lstm_forward(dec_, params_.data(dec_w_), params_.data(dec_b_), ws.dec_in.data(), ws.s.data(), ws.s.data() + d,
               ws.dec);

  ws.mask.assign(d, 1.0);
  if (rng && cfg_.dropout > 0.0) {
    const double keep = 1.0 - cfg_.dropout;
    for (double& m : ws.mask) m = rng->uniform() < cfg_.dropout ? 0.0 : 1.0 / keep;
  }
  ws.h_out.resize(d);
  for (std::size_t j = 0; j < d; ++j) ws.h_out[j] = ws.dec.h[j] * ws.mask[j];
  Usage y{params_.data(out_b_)[0], params_.data(out_b_)[1]};
  simd::gemv(2, d, params_.data(out_w_), ws.h_out.data(), y.data(), true);
  return y;
}

void AtcorNet::backward(const InputWindow& in, Workspace& base, const Usage& dout, std::vector<double>& grad) const {
  (void)in;
  auto& ws = static_cast<AtcorWorkspace&>(base);
  const auto T = static_cast<std::size_t>(cfg_.lookback);
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  auto g = [&](std::size_t b) { return grad.data() + params_.block(b).offset; };

  // readout and dropout
  g(out_b_)[0] += dout[0];
  g(out_b_)[1] += dout[1];
  simd::ger(2, d, dout.data(), ws.h_out.data(), g(out_w_));
  std::vector<double> dh(d, 0.0);
  simd::gemv_t_acc(2, d, params_.data(out_w_), dout.data(), dh.data());
  for (std::size_t j = 0; j < d; ++j) dh[j] *= ws.mask[j];

  // decoder step: dxh = [dh0; dctx; dex]
  std::vector<double> zeros(d, 0.0), dxh(dec_.cols()), dc0(d);
  lstm_backward(dec_, params_.data(dec_w_), ws.dec, dh.data(), zeros.data(), g(dec_w_), g(dec_b_), dxh.data(),
                dc0.data());
  std::vector<double> ds(2 * d, 0.0);
  std::copy(dxh.begin(), dxh.begin() + static_cast<std::ptrdiff_t>(d), ds.begin());
  std::copy(dc0.begin(), dc0.end(), ds.begin() + static_cast<std::ptrdiff_t>(d));

  // attention
  std::vector<double> dH(T * d, 0.0);
  const AttentionWeights aw{params_.data(att_v_), params_.data(att_wa_), params_.data(att_ua_), params_.data(att_ba_)};
  const AttentionGrads ag{g(att_v_), g(att_wa_), g(att_ua_), g(att_ba_)};
  attention_backward(aw, ws.s.data(), ws.h_enc.data(), ws.att, dxh.data() + d, ag, ds.data(), dH.data());

  std::vector<double> dh_next(d, 0.0), dc_next(d, 0.0);
  if (cfg_.decoder_init == DecoderInit::encoder_final) {
    for (std::size_t j = 0; j < d; ++j) {
      dH[(T - 1) * d + j] += ds[j];
      dc_next[j] = ds[d + j];
    }
  }

  // encoder, back through time
  const auto weights = cnn_weights();
  const auto cg = cnn_grads(grad);
  std::vector<double> exh(enc_.cols()), dc_prev(d), dht(d);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t j = 0; j < d; ++j) dht[j] = dH[t * d + j] + dh_next[j];
    lstm_backward(enc_, params_.data(enc_w_), ws.enc[t], dht.data(), dc_next.data(), g(enc_w_), g(enc_b_),
                  exh.data(), dc_prev.data());
    std::copy(exh.begin(), exh.begin() + static_cast<std::ptrdiff_t>(d), dh_next.begin());
    dc_next = dc_prev;
    const double dcnn = exh[d];
    cnn_backward(layers_, flat_, weights, ws.cnn[t], dcnn, cg, nullptr);
  }
}

}  // namespace atcor::model
