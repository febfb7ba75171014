#include "atcor/model/forecaster.hpp"

#include <cmath>

#include "atcor/common/error.hpp"

namespace atcor::model {

void Forecaster::set_input_scales(std::span<const double> heatmap, std::span<const double> external) {
  auto fill = [this](const char* name, std::span<const double> src) {
    auto idx = params().find(name);
    if (!idx) return;
    auto dst = params().view(*idx);
    if (src.size() != dst.size())
      throw ShapeError(std::string(name) + " expects " + std::to_string(dst.size()) + " scales, got " +
                       std::to_string(src.size()));
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = std::isfinite(src[i]) && src[i] > 0.0 ? src[i] : 1.0;
  };
  fill("hm_scale", heatmap);
  fill("ex_scale", external);
}

void check_window(const InputWindow& in, int lookback, std::size_t heatmap_size) {
  const auto t = static_cast<std::size_t>(lookback);
  if (in.usage.size() != t)
    throw ShapeError("window holds " + std::to_string(in.usage.size()) + " usage steps, expected " + std::to_string(t));
  if (heatmap_size > 0 && in.heatmaps.size() != t * heatmap_size)
    throw ShapeError("window holds " + std::to_string(in.heatmaps.size()) + " heatmap values, expected " +
                     std::to_string(t) + " x " + std::to_string(heatmap_size));
  if (in.externals.size() < t + 1) throw Error("missing external vector for the target interval");
  if (in.externals.size() != t + 1)
    throw ShapeError("window holds " + std::to_string(in.externals.size()) + " external vectors, expected " +
                     std::to_string(t + 1));
}

}  // namespace atcor::model
