#include "atcor/model/params.hpp"

#include <cmath>

#include "atcor/common/error.hpp"

namespace atcor::model {

std::size_t ParamSet::add(const std::string& name, std::vector<std::size_t> shape, bool trainable) {
  if (find(name)) throw ConfigError("duplicate parameter block " + name);
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  blocks_.push_back(ParamBlock{name, std::move(shape), values_.size(), n, trainable});
  values_.resize(values_.size() + n, 0.0);
  return blocks_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  return std::nullopt;
}

std::vector<double> ParamSet::trainable_mask() const {
  std::vector<double> m(values_.size(), 0.0);
  for (const auto& b : blocks_)
    if (b.trainable)
      for (std::size_t i = 0; i < b.size; ++i) m[b.offset + i] = 1.0;
  return m;
}

bool ParamSet::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace atcor::model
