#include "atcor/evaluate/metrics.hpp"

#include <string>

#include "atcor/common/error.hpp"

namespace atcor::evaluate {

MaeMse mae_mse(std::span<const double> truth, std::span<const double> prediction) {
  if (truth.size() != prediction.size())
    throw Error("metric inputs differ in length: " + std::to_string(truth.size()) + " vs " +
                std::to_string(prediction.size()));
  if (truth.empty()) throw Error("metrics of an empty sequence");
  ErrorSums s;
  for (std::size_t i = 0; i < truth.size(); ++i) s.add(truth[i], prediction[i]);
  return s.metrics();
}

}  // namespace atcor::evaluate
