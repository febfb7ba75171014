#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atcor::model {

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool trainable = true;
};

// All tensors of one model in a single flat buffer. Gradients use the same
// layout, so an optimizer only ever sees two equal-length vectors.
class ParamSet {
 public:
  // Returns the block index. Throws ConfigError on a duplicate name.
  std::size_t add(const std::string& name, std::vector<std::size_t> shape, bool trainable = true);

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;

  double* data(std::size_t block) { return values_.data() + blocks_[block].offset; }
  const double* data(std::size_t block) const { return values_.data() + blocks_[block].offset; }
  std::span<double> view(std::size_t block) { return {data(block), blocks_[block].size}; }
  std::span<const double> view(std::size_t block) const { return {data(block), blocks_[block].size}; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Mask with 1 for trainable entries, 0 for fixed ones (scales etc).
  std::vector<double> trainable_mask() const;
  bool all_finite() const;

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
};

}  // namespace atcor::model
