#include "atcor/model/cells.hpp"

#include <algorithm>
#include <cmath>

#include "atcor/simd/kernels.hpp"

namespace atcor::model {

namespace {

void concat(std::vector<double>& out, const double* h, std::size_t d, const double* x, std::size_t l) {
  out.resize(d + l);
  std::copy(h, h + d, out.begin());
  std::copy(x, x + l, out.begin() + static_cast<std::ptrdiff_t>(d));
}

}  // namespace

void lstm_forward(const LstmShape& s, const double* w, const double* b, const double* x, const double* h_prev,
                  const double* c_prev, LstmStep& step) {
  const std::size_t d = s.hidden;
  concat(step.xh, h_prev, d, x, s.input);
  step.act.assign(4 * d, 0.0);
  std::copy(b, b + s.gate_rows(), step.act.begin());
  simd::gemv(s.gate_rows(), s.cols(), w, step.xh.data(), step.act.data(), true);
  double* a = step.act.data();
  if (s.shared_candidate) {
    for (std::size_t j = 0; j < d; ++j) a[3 * d + j] = std::tanh(a[j]);
  } else {
    for (std::size_t j = 0; j < d; ++j) a[3 * d + j] = std::tanh(a[3 * d + j]);
  }
  for (std::size_t j = 0; j < 3 * d; ++j) a[j] = sigmoid(a[j]);
  step.c_prev.assign(c_prev, c_prev + d);
  step.c.resize(d);
  step.tanh_c.resize(d);
  step.h.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    step.c[j] = a[d + j] * c_prev[j] + a[j] * a[3 * d + j];
    step.tanh_c[j] = std::tanh(step.c[j]);
    step.h[j] = step.tanh_c[j] * a[2 * d + j];
  }
}

void lstm_backward(const LstmShape& s, const double* w, const LstmStep& step, const double* dh, const double* dc,
                   double* dw, double* db, double* dxh, double* dc_prev) {
  const std::size_t d = s.hidden;
  const double* a = step.act.data();
  std::vector<double> dz(4 * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double i = a[j], f = a[d + j], o = a[2 * d + j], g = a[3 * d + j];
    const double tc = step.tanh_c[j];
    const double dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
    dz[j] = dct * g * i * (1.0 - i);
    dz[d + j] = dct * step.c_prev[j] * f * (1.0 - f);
    dz[2 * d + j] = dh[j] * tc * o * (1.0 - o);
    const double dg = dct * i * (1.0 - g * g);
    if (s.shared_candidate)
      dz[j] += dg;
    else
      dz[3 * d + j] = dg;
    dc_prev[j] = dct * f;
  }
  const std::size_t rows = s.gate_rows();
  for (std::size_t r = 0; r < rows; ++r) db[r] += dz[r];
  simd::ger(rows, s.cols(), dz.data(), step.xh.data(), dw);
  std::fill(dxh, dxh + s.cols(), 0.0);
  simd::gemv_t_acc(rows, s.cols(), w, dz.data(), dxh);
}

void gru_forward(const GruShape& s, const double* w_zr, const double* b_zr, const double* w_n, const double* b_n,
                 const double* x, const double* h_prev, GruStep& step) {
  const std::size_t d = s.hidden;
  concat(step.xh, h_prev, d, x, s.input);
  step.zr.assign(b_zr, b_zr + 2 * d);
  simd::gemv(2 * d, s.cols(), w_zr, step.xh.data(), step.zr.data(), true);
  for (double& v : step.zr) v = sigmoid(v);
  step.rh_x = step.xh;
  for (std::size_t j = 0; j < d; ++j) step.rh_x[j] = step.zr[d + j] * h_prev[j];
  step.n.assign(b_n, b_n + d);
  simd::gemv(d, s.cols(), w_n, step.rh_x.data(), step.n.data(), true);
  step.h.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    step.n[j] = std::tanh(step.n[j]);
    const double z = step.zr[j];
    step.h[j] = (1.0 - z) * step.n[j] + z * h_prev[j];
  }
}

void gru_backward(const GruShape& s, const double* w_zr, const double* w_n, const GruStep& step, const double* dh,
                  double* dw_zr, double* db_zr, double* dw_n, double* db_n, double* dxh) {
  const std::size_t d = s.hidden;
  const std::size_t cols = s.cols();
  const double* h_prev = step.xh.data();
  std::vector<double> dan(d), dzr(2 * d), drh_x(cols, 0.0);
  std::fill(dxh, dxh + cols, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double z = step.zr[j], n = step.n[j];
    dan[j] = dh[j] * (1.0 - z) * (1.0 - n * n);
    dzr[j] = dh[j] * (h_prev[j] - n) * z * (1.0 - z);
    dxh[j] = dh[j] * z;
  }
  for (std::size_t j = 0; j < d; ++j) db_n[j] += dan[j];
  simd::ger(d, cols, dan.data(), step.rh_x.data(), dw_n);
  simd::gemv_t_acc(d, cols, w_n, dan.data(), drh_x.data());
  for (std::size_t j = 0; j < d; ++j) {
    const double r = step.zr[d + j];
    dzr[d + j] = drh_x[j] * h_prev[j] * r * (1.0 - r);
    dxh[j] += drh_x[j] * r;
  }
  for (std::size_t j = d; j < cols; ++j) dxh[j] += drh_x[j];
  for (std::size_t j = 0; j < 2 * d; ++j) db_zr[j] += dzr[j];
  simd::ger(2 * d, cols, dzr.data(), step.xh.data(), dw_zr);
  simd::gemv_t_acc(2 * d, cols, w_zr, dzr.data(), dxh);
}

void rnn_forward(std::size_t hidden, std::size_t input, const double* w, const double* b, const double* x,
                 const double* h_prev, RnnStep& step) {
  concat(step.xh, h_prev, hidden, x, input);
  step.h.assign(b, b + hidden);
  simd::gemv(hidden, hidden + input, w, step.xh.data(), step.h.data(), true);
  for (double& v : step.h) v = std::tanh(v);
}

void rnn_backward(std::size_t hidden, std::size_t input, const double* w, const RnnStep& step, const double* dh,
                  double* dw, double* db, double* dxh) {
  std::vector<double> da(hidden);
  for (std::size_t j = 0; j < hidden; ++j) da[j] = dh[j] * (1.0 - step.h[j] * step.h[j]);
  for (std::size_t j = 0; j < hidden; ++j) db[j] += da[j];
  simd::ger(hidden, hidden + input, da.data(), step.xh.data(), dw);
  std::fill(dxh, dxh + hidden + input, 0.0);
  simd::gemv_t_acc(hidden, hidden + input, w, da.data(), dxh);
}

}  // namespace atcor::model
