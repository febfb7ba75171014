#pragma once

#include <cstddef>
#include <span>

namespace atcor::evaluate {

struct MaeMse {
  double mae = 0.0;
  double mse = 0.0;
};

// MAE = mean |y - y_hat|, MSE = mean (y - y_hat)^2. Throws Error on empty
// or unequal inputs.
MaeMse mae_mse(std::span<const double> truth, std::span<const double> prediction);

// Running sums so per-station and pooled metrics come from one pass.
struct ErrorSums {
  double abs = 0.0;
  double sq = 0.0;
  std::size_t n = 0;

  void add(double truth, double prediction) {
    const double e = truth - prediction;
    abs += e < 0 ? -e : e;
    sq += e * e;
    ++n;
  }
  ErrorSums& operator+=(const ErrorSums& o) {
    abs += o.abs;
    sq += o.sq;
    n += o.n;
    return *this;
  }
  MaeMse metrics() const {
    return n == 0 ? MaeMse{} : MaeMse{abs / static_cast<double>(n), sq / static_cast<double>(n)};
  }
};

}  // namespace atcor::evaluate
