#pragma once

#include <cstddef>
#include <vector>

namespace atcor::model {

// Temporal attention of one decoder state s = [h; c] (2d) over encoder
// states H (T x d):
//   lambda_t = v . tanh(W_a s + U_a H_t + b_a),  gamma = softmax(lambda),
//   ctx = sum_t gamma_t H_t.
struct AttentionStep {
  std::size_t hidden = 0;
  std::size_t steps = 0;
  std::vector<double> e;       // T x d, tanh activations
  std::vector<double> lambda;  // T
  std::vector<double> gamma;   // T
  std::vector<double> ctx;     // d
};

struct AttentionWeights {
  const double* v;    // d
  const double* w_a;  // d x 2d
  const double* u_a;  // d x d
  const double* b_a;  // d
};

struct AttentionGrads {
  double* v;
  double* w_a;
  double* u_a;
  double* b_a;
};

// Throws ShapeError when steps == 0.
void attention_forward(std::size_t hidden, std::size_t steps, const AttentionWeights& w, const double* s,
                       const double* enc, AttentionStep& out);

// Accumulates parameter gradients, ds (2d) and denc (T x d).
void attention_backward(const AttentionWeights& w, const double* s, const double* enc, const AttentionStep& st,
                        const double* dctx, const AttentionGrads& g, double* ds, double* denc);

}  // namespace atcor::model
