#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "atcor/common/error.hpp"
#include "atcor/model/atcor_net.hpp"
#include "atcor/model/baselines.hpp"
#include "atcor/model/checkpoint.hpp"
#include "numgrad.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace atcor;
using namespace atcor::model;
using oracle::Vec;

namespace {

ModelConfig tiny(DecoderInit init = DecoderInit::encoder_final, bool enc_ex = false) {
  ModelConfig c;
  c.grid_rows = 5;
  c.grid_cols = 5;
  c.channel_names = {"pickups", "dropoffs", "poi"};
  c.convs = {{3, 3, 2}, {2, 2, 2}};
  c.hidden = 4;
  c.lookback = 5;
  c.decoder_init = init;
  c.encoder_externals = enc_ex;
  c.dropout = 0.5;
  c.seed = 3;
  return c;
}

struct Window {
  Vec heatmaps;
  std::vector<Usage> usage;
  std::vector<ingest::ExternalVector> externals;
  InputWindow view() const { return {heatmaps, usage, externals}; }
};

Window random_window(std::mt19937_64& g, std::size_t T, std::size_t hm) {
  Window w;
  w.heatmaps = oracle::random_vec(g, T * hm, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 0; t < T; ++t) w.usage.push_back({u(g), u(g)});
  for (std::size_t t = 0; t <= T; ++t) w.externals.push_back({60.0 * u(g), 15.0 * u(g), 0.2 * u(g), u(g) < 0.5 ? 0.0 : 1.0});
  return w;
}

Vec block(const ParamSet& p, const std::string& name) {
  const auto i = p.find(name);
  REQUIRE(i.has_value());
  const auto v = p.view(*i);
  return Vec(v.begin(), v.end());
}

void perturb(Forecaster& m, std::mt19937_64& g, double scale) {
  auto& v = m.params().values();
  const auto mask = m.params().trainable_mask();
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i] > 0) v[i] += u(g);
}

// CNN -> LSTM encoder -> attention -> decoder step -> affine, from loops.
Usage atcor_oracle(const AtcorNet& net, const Window& w) {
  const auto& c = net.config();
  const auto& p = net.params();
  const auto T = static_cast<std::size_t>(c.lookback);
  const auto d = static_cast<std::size_t>(c.hidden);
  const std::size_t hm = c.heatmap_size();
  const auto hs = block(p, "hm_scale"), es = block(p, "ex_scale");
  const auto layers = net.cnn_layers();
  std::vector<oracle::LstmState> enc;
  oracle::LstmState st{Vec(d, 0.0), Vec(d, 0.0)};
  const auto ew = block(p, "enc.w"), eb = block(p, "enc.b");
  Vec H;
  for (std::size_t t = 0; t < T; ++t) {
    Vec x(w.heatmaps.begin() + static_cast<std::ptrdiff_t>(t * hm),
          w.heatmaps.begin() + static_cast<std::ptrdiff_t>((t + 1) * hm));
    for (std::size_t i = 0; i < hm; ++i) x[i] /= hs[i % hs.size()];
    int rows = c.grid_rows, cols = c.grid_cols, ch = c.channels();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto n = std::to_string(l + 1);
      x = oracle::conv_relu(x, rows, cols, ch, block(p, "conv" + n + ".w"), block(p, "conv" + n + ".b"), layers[l].kh,
                            layers[l].kw, layers[l].out_c);
      ch = layers[l].out_c;
      if (layers[l].pool) {
        x = oracle::max_pool(x, rows, cols, ch);
        rows /= 2;
        cols /= 2;
      }
    }
    const auto fw = block(p, "cnn_fc.w");
    double feat = block(p, "cnn_fc.b")[0];
    for (std::size_t i = 0; i < x.size(); ++i) feat += fw[i] * x[i];
    Vec in{feat, w.usage[t][0], w.usage[t][1]};
    if (c.encoder_externals)
      for (std::size_t k = 0; k < 4; ++k) in.push_back(w.externals[t][k] / es[k]);
    st = oracle::lstm_step(ew, eb, d, c.shared_candidate, in, st);
    H.insert(H.end(), st.h.begin(), st.h.end());
  }
  oracle::LstmState s0 = c.decoder_init == DecoderInit::encoder_final ? st : oracle::LstmState{Vec(d, 0.0), Vec(d, 0.0)};
  Vec s = s0.h;
  s.insert(s.end(), s0.c.begin(), s0.c.end());
  const auto att = oracle::attention(block(p, "att.v"), block(p, "att.w_a"), block(p, "att.u_a"), block(p, "att.b_a"),
                                     d, T, s, H);
  Vec din = att.ctx;
  for (std::size_t k = 0; k < 4; ++k) din.push_back(w.externals[T][k] / es[k]);
  const auto dec = oracle::lstm_step(block(p, "dec.w"), block(p, "dec.b"), d, c.shared_candidate, din, s0);
  const auto ow = block(p, "out.w"), ob = block(p, "out.b");
  Usage y{ob[0], ob[1]};
  for (std::size_t j = 0; j < d; ++j) {
    y[0] += ow[j] * dec.h[j];
    y[1] += ow[d + j] * dec.h[j];
  }
  return y;
}

double half_sq(const Usage& y, const Usage& t) {
  return 0.5 * ((y[0] - t[0]) * (y[0] - t[0]) + (y[1] - t[1]) * (y[1] - t[1]));
}

void check_all_gradients(Forecaster& m, const Window& w, double tol) {
  auto ws = m.workspace();
  const Usage target{0.3, 0.6};
  const auto y = m.forward(w.view(), *ws, nullptr);
  std::vector<double> grad(m.params().size(), 0.0);
  m.backward(w.view(), *ws, {y[0] - target[0], y[1] - target[1]}, grad);
  auto& vals = m.params().values();
  const auto num = numgrad::central([&] { return half_sq(m.forward(w.view(), *ws, nullptr), target); }, vals, 1e-6);
  const auto mask = m.params().trainable_mask();
  double worst = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (mask[i] > 0) worst = std::max(worst, std::abs(grad[i] - num[i]) / std::max(1.0, std::abs(num[i])));
  CHECK(worst < tol);
}

}  // namespace

TEST_CASE("atcor forward equals the composed oracle in every decoder mode") {
  std::mt19937_64 g(21);
  for (auto init : {DecoderInit::encoder_final, DecoderInit::zeros})
    for (bool enc_ex : {false, true})
      for (bool shared : {false, true}) {
        auto cfg = tiny(init, enc_ex);
        cfg.shared_candidate = shared;
        AtcorNet net(cfg);
        perturb(net, g, 0.1);
        net.set_input_scales(Vec{2.0, 3.0, 4.0}, Vec{90.0, 20.0, 0.5, 1.0});
        const auto w = random_window(g, 5, cfg.heatmap_size());
        auto ws = net.workspace();
        const auto y = net.forward(w.view(), *ws, nullptr);
        const auto ref = atcor_oracle(net, w);
        CHECK(y[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(y[1] == doctest::Approx(ref[1]).epsilon(1e-12));
        double sum = 0.0;
        for (double a : net.attention_weights(*ws)) sum += a;
        CHECK(sum == doctest::Approx(1.0));
      }
}

TEST_CASE("atcor backward matches finite differences on every parameter") {
  std::mt19937_64 g(22);
  for (auto init : {DecoderInit::encoder_final, DecoderInit::zeros}) {
    auto cfg = tiny(init, init == DecoderInit::zeros);
    AtcorNet net(cfg);
    perturb(net, g, 0.1);
    check_all_gradients(net, random_window(g, 5, cfg.heatmap_size()), 1e-6);
  }
}

TEST_CASE("baseline backward matches finite differences") {
  std::mt19937_64 g(23);
  for (auto kind : {RecurrentKind::rnn, RecurrentKind::lstm, RecurrentKind::gru}) {
    BaselineConfig c;
    c.kind = kind;
    c.hidden = 4;
    c.lookback = 5;
    c.seed = 2;
    RecurrentBaseline m(c);
    perturb(m, g, 0.1);
    m.set_input_scales({}, Vec{90.0, 20.0, 0.5, 1.0});
    check_all_gradients(m, random_window(g, 5, 0), 1e-6);
  }
}

TEST_CASE("lstm baseline equals the oracle recurrence over usage and externals") {
  std::mt19937_64 g(24);
  BaselineConfig c;
  c.hidden = 3;
  c.lookback = 4;
  RecurrentBaseline m(c);
  perturb(m, g, 0.2);
  const auto w = random_window(g, 4, 0);
  oracle::LstmState st{Vec(3, 0.0), Vec(3, 0.0)};
  for (std::size_t t = 0; t < 4; ++t) {
    Vec x{w.usage[t][0], w.usage[t][1]};
    x.insert(x.end(), w.externals[t].begin(), w.externals[t].end());
    st = oracle::lstm_step(block(m.params(), "lstm.w"), block(m.params(), "lstm.b"), 3, false, x, st);
  }
  const auto ow = block(m.params(), "out.w"), ob = block(m.params(), "out.b");
  auto ws = m.workspace();
  const auto y = m.forward(w.view(), *ws, nullptr);
  double y0 = ob[0], y1 = ob[1];
  for (std::size_t j = 0; j < 3; ++j) {
    y0 += ow[j] * st.h[j];
    y1 += ow[3 + j] * st.h[j];
  }
  CHECK(y[0] == doctest::Approx(y0).epsilon(1e-13));
  CHECK(y[1] == doctest::Approx(y1).epsilon(1e-13));
}

TEST_CASE("persistence repeats the last observed interval") {
  std::mt19937_64 g(25);
  Persistence p(5);
  const auto w = random_window(g, 5, 0);
  auto ws = p.workspace();
  const auto y = p.forward(w.view(), *ws, nullptr);
  CHECK(y == w.usage.back());
  CHECK_FALSE(p.trainable());
}

TEST_CASE("dropout is inactive without an rng and reproducible with one") {
  std::mt19937_64 g(26);
  const auto cfg = tiny();
  AtcorNet net(cfg);
  const auto w = random_window(g, 5, cfg.heatmap_size());
  auto ws = net.workspace();
  const auto a = net.forward(w.view(), *ws, nullptr);
  CHECK(net.forward(w.view(), *ws, nullptr) == a);
  Rng r1(9), r2(9);
  CHECK(net.forward(w.view(), *ws, &r1) == net.forward(w.view(), *ws, &r2));
}

TEST_CASE("construction is deterministic in the seed") {
  auto c = tiny();
  AtcorNet a(c), b(c);
  CHECK(a.params().values() == b.params().values());
  c.seed = 4;
  AtcorNet d(c);
  CHECK(a.params().values() != d.params().values());
  // forget-gate bias starts at one
  const auto eb = block(a.params(), "enc.b");
  for (std::size_t j = 4; j < 8; ++j) CHECK(eb[j] == 1.0);
}

TEST_CASE("window validation rejects wrong lengths") {
  std::mt19937_64 g(27);
  const auto cfg = tiny();
  AtcorNet net(cfg);
  auto w = random_window(g, 5, cfg.heatmap_size());
  auto ws = net.workspace();
  w.externals.pop_back();
  CHECK_THROWS_AS(net.forward(w.view(), *ws, nullptr), Error);
  w = random_window(g, 4, cfg.heatmap_size());
  CHECK_THROWS_AS(net.forward(w.view(), *ws, nullptr), ShapeError);
}

TEST_CASE("fingerprints round-trip and reject unknown keys") {
  auto c = tiny(DecoderInit::zeros, true);
  c.shared_candidate = true;
  const auto text = c.fingerprint();
  CHECK(ModelConfig::from_fingerprint(text).fingerprint() == text);
  CHECK_THROWS_AS(ModelConfig::from_fingerprint(text + "bogus=1\n"), ConfigError);
  BaselineConfig b;
  b.kind = RecurrentKind::gru;
  CHECK(BaselineConfig::from_fingerprint(b.fingerprint()).fingerprint() == b.fingerprint());
  CHECK(make_forecaster(text)->scheme() == "atcor");
  CHECK(make_forecaster(b.fingerprint())->scheme() == "gru");
}

TEST_CASE("checkpoints restore parameters and refuse other architectures") {
  const auto dir = fs::temp_directory_path() / "atcor_unit_ckpt";
  fs::create_directories(dir);
  const auto path = dir / "m.ckpt";
  std::mt19937_64 g(28);
  AtcorNet net(tiny());
  perturb(net, g, 0.3);
  net.set_input_scales(Vec{2.0, 3.0, 4.0}, Vec{90.0, 20.0, 0.5, 1.0});
  save_checkpoint(path, net, {{"cluster", "0"}});

  const auto header = read_checkpoint_header(path);
  CHECK(header.fingerprint == net.fingerprint());
  CHECK(header.metadata.at("cluster") == "0");

  AtcorNet same(tiny());
  load_checkpoint(path, same);
  CHECK(same.params().values() == net.params().values());
  const auto reopened = open_checkpoint(path);
  CHECK(reopened->params().values() == net.params().values());

  auto other_cfg = tiny();
  other_cfg.hidden = 5;
  AtcorNet other(other_cfg);
  CHECK_THROWS_AS(load_checkpoint(path, other), FingerprintError);
  auto other_conv = tiny();
  other_conv.convs = {{3, 3, 3}, {2, 2, 2}};
  AtcorNet other2(other_conv);
  CHECK_THROWS_AS(load_checkpoint(path, other2), FingerprintError);

  // truncated file
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir / "cut.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  AtcorNet victim(tiny());
  CHECK_THROWS_AS(load_checkpoint(dir / "cut.ckpt", victim), Error);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  fs::remove_all(dir);
}
