#include "atcor/model/attention.hpp"

#include <algorithm>
#include <cmath>

#include "atcor/common/error.hpp"
#include "atcor/simd/kernels.hpp"

namespace atcor::model {

void attention_forward(std::size_t d, std::size_t steps, const AttentionWeights& w, const double* s,
                       const double* enc, AttentionStep& out) {
  if (steps == 0) throw ShapeError("attention over zero encoder steps");
  out.hidden = d;
  out.steps = steps;
  std::vector<double> a(w.b_a, w.b_a + d);
  simd::gemv(d, 2 * d, w.w_a, s, a.data(), true);
  out.e.resize(steps * d);
  simd::kernels().gemm_nt(steps, d, d, enc, w.u_a, out.e.data(), false);
  out.lambda.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double* e = out.e.data() + t * d;
    for (std::size_t j = 0; j < d; ++j) e[j] = std::tanh(e[j] + a[j]);
    out.lambda[t] = simd::dot(w.v, e, d);
  }
  const double mx = *std::max_element(out.lambda.begin(), out.lambda.end());
  out.gamma.resize(steps);
  double z = 0.0;
  for (std::size_t t = 0; t < steps; ++t) z += (out.gamma[t] = std::exp(out.lambda[t] - mx));
  for (double& g : out.gamma) g /= z;
  out.ctx.assign(d, 0.0);
  for (std::size_t t = 0; t < steps; ++t) simd::axpy(out.gamma[t], enc + t * d, out.ctx.data(), d);
}

void attention_backward(const AttentionWeights& w, const double* s, const double* enc, const AttentionStep& st,
                        const double* dctx, const AttentionGrads& g, double* ds, double* denc) {
  const std::size_t d = st.hidden;
  const std::size_t steps = st.steps;
  std::vector<double> dgamma(steps);
  double mean = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    dgamma[t] = simd::dot(dctx, enc + t * d, d);
    simd::axpy(st.gamma[t], dctx, denc + t * d, d);
    mean += st.gamma[t] * dgamma[t];
  }
  std::vector<double> du(steps * d);
  std::vector<double> da(d, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double dl = st.gamma[t] * (dgamma[t] - mean);
    const double* e = st.e.data() + t * d;
    double* u = du.data() + t * d;
    for (std::size_t j = 0; j < d; ++j) {
      g.v[j] += dl * e[j];
      u[j] = dl * w.v[j] * (1.0 - e[j] * e[j]);
      da[j] += u[j];
    }
  }
  // dU_a += du^T H ; dH += du U_a
  simd::kernels().gemm_tn(d, d, steps, du.data(), enc, g.u_a, true);
  simd::kernels().gemm_nn(steps, d, d, du.data(), w.u_a, denc, true);
  for (std::size_t j = 0; j < d; ++j) g.b_a[j] += da[j];
  simd::ger(d, 2 * d, da.data(), s, g.w_a);
  simd::gemv_t_acc(d, 2 * d, w.w_a, da.data(), ds);
}

}  // namespace atcor::model
