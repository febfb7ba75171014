#include <doctest.h>

#include <random>

#include "atcor/common/error.hpp"
#include "atcor/model/attention.hpp"
#include "atcor/model/cells.hpp"
#include "atcor/model/cnn.hpp"
#include "numgrad.hpp"
#include "oracles.hpp"

using namespace atcor;
using namespace atcor::model;
using oracle::Vec;

namespace {

double weighted(const Vec& v, const Vec& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * r[i];
  return s;
}

}  // namespace

TEST_CASE("lstm backward matches finite differences") {
  std::mt19937_64 g(10);
  for (bool shared : {false, true}) {
    const std::size_t d = 5, l = 3;
    const LstmShape s{d, l, shared};
    auto w = oracle::random_vec(g, s.gate_rows() * s.cols(), 0.7), b = oracle::random_vec(g, s.gate_rows(), 0.3);
    auto x = oracle::random_vec(g, l), h0 = oracle::random_vec(g, d), c0 = oracle::random_vec(g, d);
    const auto rh = oracle::random_vec(g, d), rc = oracle::random_vec(g, d);
    auto loss = [&] {
      LstmStep st;
      lstm_forward(s, w.data(), b.data(), x.data(), h0.data(), c0.data(), st);
      return weighted(st.h, rh) + weighted(st.c, rc);
    };
    LstmStep st;
    lstm_forward(s, w.data(), b.data(), x.data(), h0.data(), c0.data(), st);
    Vec dw(w.size(), 0.0), db(b.size(), 0.0), dxh(s.cols()), dc(d);
    lstm_backward(s, w.data(), st, rh.data(), rc.data(), dw.data(), db.data(), dxh.data(), dc.data());
    CHECK(numgrad::max_abs_diff(dw, numgrad::central(loss, w)) < 1e-8);
    CHECK(numgrad::max_abs_diff(db, numgrad::central(loss, b)) < 1e-8);
    CHECK(numgrad::max_abs_diff(dc, numgrad::central(loss, c0)) < 1e-8);
    const auto gh = numgrad::central(loss, h0), gx = numgrad::central(loss, x);
    Vec dhx(gh);
    dhx.insert(dhx.end(), gx.begin(), gx.end());
    CHECK(numgrad::max_abs_diff(dxh, dhx) < 1e-8);
  }
}

TEST_CASE("gru forward matches the oracle and backward matches finite differences") {
  std::mt19937_64 g(11);
  const std::size_t d = 4, l = 3;
  const GruShape s{d, l};
  auto wzr = oracle::random_vec(g, 2 * d * s.cols(), 0.7), bzr = oracle::random_vec(g, 2 * d, 0.3);
  auto wn = oracle::random_vec(g, d * s.cols(), 0.7), bn = oracle::random_vec(g, d, 0.3);
  auto x = oracle::random_vec(g, l), h0 = oracle::random_vec(g, d);
  const auto r = oracle::random_vec(g, d);
  GruStep st;
  gru_forward(s, wzr.data(), bzr.data(), wn.data(), bn.data(), x.data(), h0.data(), st);
  CHECK(numgrad::max_abs_diff(st.h, oracle::gru_step(wzr, bzr, wn, bn, d, x, h0)) < 1e-14);

  auto loss = [&] {
    GruStep t;
    gru_forward(s, wzr.data(), bzr.data(), wn.data(), bn.data(), x.data(), h0.data(), t);
    return weighted(t.h, r);
  };
  Vec dwzr(wzr.size(), 0.0), dbzr(bzr.size(), 0.0), dwn(wn.size(), 0.0), dbn(bn.size(), 0.0), dxh(s.cols());
  gru_backward(s, wzr.data(), wn.data(), st, r.data(), dwzr.data(), dbzr.data(), dwn.data(), dbn.data(), dxh.data());
  CHECK(numgrad::max_abs_diff(dwzr, numgrad::central(loss, wzr)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dbzr, numgrad::central(loss, bzr)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dwn, numgrad::central(loss, wn)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dbn, numgrad::central(loss, bn)) < 1e-8);
  auto gh = numgrad::central(loss, h0);
  const auto gx = numgrad::central(loss, x);
  gh.insert(gh.end(), gx.begin(), gx.end());
  CHECK(numgrad::max_abs_diff(dxh, gh) < 1e-8);
}

TEST_CASE("rnn cell matches the oracle and its gradients") {
  std::mt19937_64 g(12);
  const std::size_t d = 3, l = 2;
  auto w = oracle::random_vec(g, d * (d + l)), b = oracle::random_vec(g, d);
  auto x = oracle::random_vec(g, l), h0 = oracle::random_vec(g, d);
  const auto r = oracle::random_vec(g, d);
  RnnStep st;
  rnn_forward(d, l, w.data(), b.data(), x.data(), h0.data(), st);
  CHECK(numgrad::max_abs_diff(st.h, oracle::rnn_step(w, b, d, x, h0)) < 1e-15);
  auto loss = [&] {
    RnnStep t;
    rnn_forward(d, l, w.data(), b.data(), x.data(), h0.data(), t);
    return weighted(t.h, r);
  };
  Vec dw(w.size(), 0.0), db(d, 0.0), dxh(d + l);
  rnn_backward(d, l, w.data(), st, r.data(), dw.data(), db.data(), dxh.data());
  CHECK(numgrad::max_abs_diff(dw, numgrad::central(loss, w)) < 1e-8);
  CHECK(numgrad::max_abs_diff(db, numgrad::central(loss, b)) < 1e-8);
}

TEST_CASE("attention weights form a distribution and backward matches finite differences") {
  std::mt19937_64 g(13);
  const std::size_t d = 4, T = 5;
  auto v = oracle::random_vec(g, d), wa = oracle::random_vec(g, d * 2 * d), ua = oracle::random_vec(g, d * d),
       ba = oracle::random_vec(g, d), s = oracle::random_vec(g, 2 * d), enc = oracle::random_vec(g, T * d);
  const auto r = oracle::random_vec(g, d);
  auto run = [&] {
    AttentionStep st;
    attention_forward(d, T, {v.data(), wa.data(), ua.data(), ba.data()}, s.data(), enc.data(), st);
    return st;
  };
  const auto st = run();
  double sum = 0.0;
  for (double x : st.gamma) {
    CHECK(x > 0.0);
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

  auto loss = [&] { return weighted(run().ctx, r); };
  Vec dv(d, 0.0), dwa(wa.size(), 0.0), dua(ua.size(), 0.0), dba(d, 0.0), ds(2 * d, 0.0), denc(T * d, 0.0);
  attention_backward({v.data(), wa.data(), ua.data(), ba.data()}, s.data(), enc.data(), st, r.data(),
                     {dv.data(), dwa.data(), dua.data(), dba.data()}, ds.data(), denc.data());
  CHECK(numgrad::max_abs_diff(dv, numgrad::central(loss, v)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dwa, numgrad::central(loss, wa)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dua, numgrad::central(loss, ua)) < 1e-8);
  CHECK(numgrad::max_abs_diff(dba, numgrad::central(loss, ba)) < 1e-8);
  CHECK(numgrad::max_abs_diff(ds, numgrad::central(loss, s)) < 1e-8);
  CHECK(numgrad::max_abs_diff(denc, numgrad::central(loss, enc)) < 1e-8);

  AttentionStep empty;
  CHECK_THROWS_AS(attention_forward(d, 0, {v.data(), wa.data(), ua.data(), ba.data()}, s.data(), enc.data(), empty),
                  ShapeError);
}

TEST_CASE("one-step attention puts all weight on the only state") {
  std::mt19937_64 g(14);
  const std::size_t d = 3;
  const auto v = oracle::random_vec(g, d), wa = oracle::random_vec(g, 2 * d * d), ua = oracle::random_vec(g, d * d),
             ba = oracle::random_vec(g, d), s = oracle::random_vec(g, 2 * d), enc = oracle::random_vec(g, d);
  AttentionStep st;
  attention_forward(d, 1, {v.data(), wa.data(), ua.data(), ba.data()}, s.data(), enc.data(), st);
  CHECK(st.gamma[0] == 1.0);
  CHECK(st.ctx == enc);
}

TEST_CASE("cnn forward matches conv, pool and affine loops") {
  std::mt19937_64 g(15);
  const CnnShape shape{11, 11, 3, {{3, 3, 4}, {3, 3, 2}, {2, 2, 3}}};
  const auto layers = shape.layers();
  REQUIRE(layers.size() == 3);
  CHECK(layers[0].pooled_h == 5);
  CHECK(layers[1].pooled_h == 2);
  CHECK(layers[2].pooled_h == 2);
  CHECK(shape.flat_size() == 2 * 2 * 3);

  std::vector<Vec> w, b;
  for (const auto& l : layers) {
    w.push_back(oracle::random_vec(g, static_cast<std::size_t>(l.out_c) * l.patch(), 0.5));
    b.push_back(oracle::random_vec(g, static_cast<std::size_t>(l.out_c), 0.2));
  }
  const auto fc = oracle::random_vec(g, shape.flat_size());
  const Vec fb{0.3};
  const auto input = oracle::random_vec(g, shape.input_size(), 2.0);

  CnnWeights cw;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cw.w.push_back(w[i].data());
    cw.b.push_back(b[i].data());
  }
  cw.fc_w = fc.data();
  cw.fc_b = fb.data();
  CnnCache cache;
  const double out = cnn_forward(layers, shape.flat_size(), cw, input.data(), cache);

  Vec x = input;
  int rows = 11, cols = 11, ch = 3;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    x = oracle::conv_relu(x, rows, cols, ch, w[i], b[i], l.kh, l.kw, l.out_c);
    ch = l.out_c;
    if (l.pool) {
      x = oracle::max_pool(x, rows, cols, ch);
      rows /= 2;
      cols /= 2;
    }
  }
  double ref = fb[0];
  for (std::size_t i = 0; i < x.size(); ++i) ref += fc[i] * x[i];
  CHECK(out == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("cnn backward matches finite differences, input gradient included") {
  std::mt19937_64 g(16);
  const CnnShape shape{7, 7, 2, {{3, 3, 3}, {2, 2, 2}}};
  const auto layers = shape.layers();
  auto w0 = oracle::random_vec(g, 3 * layers[0].patch(), 0.5), b0 = oracle::random_vec(g, 3, 0.2);
  auto w1 = oracle::random_vec(g, 2 * layers[1].patch(), 0.5), b1 = oracle::random_vec(g, 2, 0.2);
  auto fc = oracle::random_vec(g, shape.flat_size());
  Vec fb{0.1};
  auto input = oracle::random_vec(g, shape.input_size(), 2.0);
  auto weights = [&] {
    CnnWeights cw;
    cw.w = {w0.data(), w1.data()};
    cw.b = {b0.data(), b1.data()};
    cw.fc_w = fc.data();
    cw.fc_b = fb.data();
    return cw;
  };
  auto f = [&] {
    CnnCache c;
    return cnn_forward(layers, shape.flat_size(), weights(), input.data(), c);
  };
  CnnCache cache;
  cnn_forward(layers, shape.flat_size(), weights(), input.data(), cache);
  Vec gw0(w0.size(), 0.0), gb0(3, 0.0), gw1(w1.size(), 0.0), gb1(2, 0.0), gfc(fc.size(), 0.0), gfb(1, 0.0),
      gin(input.size(), 0.0);
  CnnGrads cg;
  cg.w = {gw0.data(), gw1.data()};
  cg.b = {gb0.data(), gb1.data()};
  cg.fc_w = gfc.data();
  cg.fc_b = gfb.data();
  cnn_backward(layers, shape.flat_size(), weights(), cache, 1.0, cg, gin.data());
  CHECK(numgrad::max_abs_diff(gw0, numgrad::central(f, w0)) < 1e-7);
  CHECK(numgrad::max_abs_diff(gb0, numgrad::central(f, b0)) < 1e-7);
  CHECK(numgrad::max_abs_diff(gw1, numgrad::central(f, w1)) < 1e-7);
  CHECK(numgrad::max_abs_diff(gb1, numgrad::central(f, b1)) < 1e-7);
  CHECK(numgrad::max_abs_diff(gfc, numgrad::central(f, fc)) < 1e-7);
  CHECK(gfb[0] == 1.0);
  CHECK(numgrad::max_abs_diff(gin, numgrad::central(f, input)) < 1e-7);
}

TEST_CASE("pooling that would empty the map is rejected") {
  const CnnShape shape{3, 3, 1, {{3, 3, 2}, {3, 3, 2}, {2, 2, 2}}};
  CHECK_THROWS_AS(shape.layers(), ShapeError);
}
