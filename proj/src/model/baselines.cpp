#include "atcor/model/baselines.hpp"

#include <cmath>
#include <sstream>

#include "atcor/common/error.hpp"
#include "atcor/model/atcor_net.hpp"
#include "atcor/simd/kernels.hpp"

namespace atcor::model {

namespace {

struct BaselineWorkspace final : Workspace {
  std::vector<double> x;  // lookback x input
  std::vector<RnnStep> rnn;
  std::vector<LstmStep> lstm;
  std::vector<GruStep> gru;
  std::vector<double> mask;
  std::vector<double> h_out;
};

}  // namespace

std::string_view kind_name(RecurrentKind k) {
  switch (k) {
    case RecurrentKind::rnn: return "rnn";
    case RecurrentKind::lstm: return "lstm";
    case RecurrentKind::gru: return "gru";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (hidden < 1) throw ConfigError("hidden size must be >= 1");
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

std::string BaselineConfig::fingerprint() const {
  std::ostringstream o;
  o.precision(17);
  o << "scheme=" << kind_name(kind) << "\n"
    << "hidden=" << hidden << "\n"
    << "lookback=" << lookback << "\n"
    << "inputs=usage,externals\n"
    << "dropout=" << dropout << "\n"
    << "usage_scaling=" << (usage_scaling ? "station_max" : "none") << "\n"
    << "external_scaling=component_max\n"
    << "init=uniform_fan_in;forget_bias_1\n"
    << "seed=" << seed << "\n";
  return o.str();
}

BaselineConfig BaselineConfig::from_fingerprint(const std::string& text) {
  auto kv = parse_fingerprint(text);
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError(std::string("fingerprint lacks ") + k);
    return it->second;
  };
  BaselineConfig c;
  const auto& s = get("scheme");
  if (s == "rnn") c.kind = RecurrentKind::rnn;
  else if (s == "lstm") c.kind = RecurrentKind::lstm;
  else if (s == "gru") c.kind = RecurrentKind::gru;
  else throw ConfigError("fingerprint is not a recurrent baseline: " + s);
  c.hidden = std::stoi(get("hidden"));
  c.lookback = std::stoi(get("lookback"));
  c.dropout = std::stod(get("dropout"));
  c.usage_scaling = get("usage_scaling") != "none";
  c.seed = std::stoull(get("seed"));
  if (c.fingerprint() != text) throw ConfigError("fingerprint does not round-trip; unknown keys or formatting");
  return c;
}

RecurrentBaseline::RecurrentBaseline(BaselineConfig config) : cfg_(config) {
  cfg_.validate();
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t cols = d + input_;
  switch (cfg_.kind) {
    case RecurrentKind::rnn:
      w_ = params_.add("rnn.w", {d, cols});
      b_ = params_.add("rnn.b", {d});
      break;
    case RecurrentKind::lstm:
      w_ = params_.add("lstm.w", {4 * d, cols});
      b_ = params_.add("lstm.b", {4 * d});
      break;
    case RecurrentKind::gru:
      w_ = params_.add("gru.w_zr", {2 * d, cols});
      b_ = params_.add("gru.b_zr", {2 * d});
      w2_ = params_.add("gru.w_n", {d, cols});
      b2_ = params_.add("gru.b_n", {d});
      break;
  }
  out_w_ = params_.add("out.w", {2, d});
  out_b_ = params_.add("out.b", {2});
  ex_scale_ = params_.add("ex_scale", {ingest::kExternalDim}, false);

  Rng rng(cfg_.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : params_.view(w_)) v = rng.uniform(-bound, bound);
  if (cfg_.kind == RecurrentKind::gru)
    for (double& v : params_.view(w2_)) v = rng.uniform(-bound, bound);
  for (double& v : params_.view(out_w_)) v = rng.uniform(-1.0 / std::sqrt(double(d)), 1.0 / std::sqrt(double(d)));
  if (cfg_.kind == RecurrentKind::lstm)
    for (std::size_t j = 0; j < d; ++j) params_.data(b_)[d + j] = 1.0;
  for (double& v : params_.view(ex_scale_)) v = 1.0;
}

std::unique_ptr<Workspace> RecurrentBaseline::workspace() const { return std::make_unique<BaselineWorkspace>(); }

Usage RecurrentBaseline::forward(const InputWindow& in, Workspace& base, Rng* rng) const {
  check_window(in, cfg_.lookback, 0);
  auto& ws = static_cast<BaselineWorkspace&>(base);
  const auto T = static_cast<std::size_t>(cfg_.lookback);
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  const double* es = params_.data(ex_scale_);
  ws.x.resize(T * input_);
  for (std::size_t t = 0; t < T; ++t) {
    double* x = ws.x.data() + t * input_;
    x[0] = in.usage[t][0];
    x[1] = in.usage[t][1];
    for (std::size_t k = 0; k < ingest::kExternalDim; ++k) x[2 + k] = in.externals[t][k] / es[k];
  }
  std::vector<double> zeros(d, 0.0);
  const double* h = zeros.data();
  switch (cfg_.kind) {
    case RecurrentKind::rnn:
      ws.rnn.resize(T);
      for (std::size_t t = 0; t < T; ++t) {
        rnn_forward(d, input_, params_.data(w_), params_.data(b_), ws.x.data() + t * input_, h, ws.rnn[t]);
        h = ws.rnn[t].h.data();
      }
      break;
    case RecurrentKind::lstm: {
      ws.lstm.resize(T);
      const LstmShape s{d, input_, false};
      const double* c = zeros.data();
      for (std::size_t t = 0; t < T; ++t) {
        lstm_forward(s, params_.data(w_), params_.data(b_), ws.x.data() + t * input_, h, c, ws.lstm[t]);
        h = ws.lstm[t].h.data();
        c = ws.lstm[t].c.data();
      }
      break;
    }
    case RecurrentKind::gru: {
      ws.gru.resize(T);
      const GruShape s{d, input_};
      for (std::size_t t = 0; t < T; ++t) {
        gru_forward(s, params_.data(w_), params_.data(b_), params_.data(w2_), params_.data(b2_),
                    ws.x.data() + t * input_, h, ws.gru[t]);
        h = ws.gru[t].h.data();
      }
      break;
    }
  }
  ws.mask.assign(d, 1.0);
  if (rng && cfg_.dropout > 0.0)
    for (double& m : ws.mask) m = rng->uniform() < cfg_.dropout ? 0.0 : 1.0 / (1.0 - cfg_.dropout);
  ws.h_out.resize(d);
  for (std::size_t j = 0; j < d; ++j) ws.h_out[j] = h[j] * ws.mask[j];
  Usage y{params_.data(out_b_)[0], params_.data(out_b_)[1]};
  simd::gemv(2, d, params_.data(out_w_), ws.h_out.data(), y.data(), true);
  return y;
}

void RecurrentBaseline::backward(const InputWindow&, Workspace& base, const Usage& dout,
                                 std::vector<double>& grad) const {
  auto& ws = static_cast<BaselineWorkspace&>(base);
  const auto T = static_cast<std::size_t>(cfg_.lookback);
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  auto g = [&](std::size_t b) { return grad.data() + params_.block(b).offset; };
  g(out_b_)[0] += dout[0];
  g(out_b_)[1] += dout[1];
  simd::ger(2, d, dout.data(), ws.h_out.data(), g(out_w_));
  std::vector<double> dh(d, 0.0), dxh(d + input_), dc(d, 0.0), dc_prev(d);
  simd::gemv_t_acc(2, d, params_.data(out_w_), dout.data(), dh.data());
  for (std::size_t j = 0; j < d; ++j) dh[j] *= ws.mask[j];
  for (std::size_t t = T; t-- > 0;) {
    switch (cfg_.kind) {
      case RecurrentKind::rnn:
        rnn_backward(d, input_, params_.data(w_), ws.rnn[t], dh.data(), g(w_), g(b_), dxh.data());
        break;
      case RecurrentKind::lstm:
        lstm_backward(LstmShape{d, input_, false}, params_.data(w_), ws.lstm[t], dh.data(), dc.data(), g(w_), g(b_),
                      dxh.data(), dc_prev.data());
        dc = dc_prev;
        break;
      case RecurrentKind::gru:
        gru_backward(GruShape{d, input_}, params_.data(w_), params_.data(w2_), ws.gru[t], dh.data(), g(w_), g(b_),
                     g(w2_), g(b2_), dxh.data());
        break;
    }
    std::copy(dxh.begin(), dxh.begin() + static_cast<std::ptrdiff_t>(d), dh.begin());
  }
}

std::string Persistence::fingerprint() const {
  return "scheme=persistence\nlookback=" + std::to_string(lookback_) + "\n";
}

Usage Persistence::forward(const InputWindow& in, Workspace&, Rng*) const {
  check_window(in, lookback_, 0);
  return in.usage.back();
}

}  // namespace atcor::model
