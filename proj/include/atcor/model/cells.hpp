#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Recurrent cells with explicit forward caches and hand-written backward
// passes. Weight matrices are row-major and multiply the concatenation
// [h_prev; x], hidden part first.
namespace atcor::model {

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Gate rows are stacked i, f, o, c~. With shared_candidate the c~ row block
// is absent and the candidate reuses the input-gate pre-activation.
struct LstmShape {
  std::size_t hidden = 0;
  std::size_t input = 0;
  bool shared_candidate = false;

  std::size_t gate_rows() const { return (shared_candidate ? 3 : 4) * hidden; }
  std::size_t cols() const { return hidden + input; }
};

struct LstmStep {
  std::vector<double> xh;      // [h_prev; x]
  std::vector<double> act;     // i, f, o, c~ after nonlinearity, 4*hidden
  std::vector<double> c_prev;
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

void lstm_forward(const LstmShape& s, const double* w, const double* b, const double* x, const double* h_prev,
                  const double* c_prev, LstmStep& step);

// dh, dc: gradients flowing into h_t and c_t. Accumulates into dw, db;
// overwrites dxh (length cols) and dc_prev (length hidden).
void lstm_backward(const LstmShape& s, const double* w, const LstmStep& step, const double* dh, const double* dc,
                   double* dw, double* db, double* dxh, double* dc_prev);

// h = (1 - z) * n + z * h_prev, z and r from w_zr (2*hidden rows),
// n = tanh(w_n [r * h_prev; x] + b_n).
struct GruShape {
  std::size_t hidden = 0;
  std::size_t input = 0;
  std::size_t cols() const { return hidden + input; }
};

struct GruStep {
  std::vector<double> xh;    // [h_prev; x]
  std::vector<double> zr;    // z then r
  std::vector<double> rh_x;  // [r * h_prev; x]
  std::vector<double> n;
  std::vector<double> h;
};

void gru_forward(const GruShape& s, const double* w_zr, const double* b_zr, const double* w_n, const double* b_n,
                 const double* x, const double* h_prev, GruStep& step);
void gru_backward(const GruShape& s, const double* w_zr, const double* w_n, const GruStep& step, const double* dh,
                  double* dw_zr, double* db_zr, double* dw_n, double* db_n, double* dxh);

// h = tanh(w [h_prev; x] + b)
struct RnnStep {
  std::vector<double> xh;
  std::vector<double> h;
};

void rnn_forward(std::size_t hidden, std::size_t input, const double* w, const double* b, const double* x,
                 const double* h_prev, RnnStep& step);
void rnn_backward(std::size_t hidden, std::size_t input, const double* w, const RnnStep& step, const double* dh,
                  double* dw, double* db, double* dxh);

}  // namespace atcor::model
