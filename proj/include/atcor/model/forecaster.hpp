#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atcor/common/rng.hpp"
#include "atcor/ingest/external.hpp"
#include "atcor/model/params.hpp"

namespace atcor::model {

using Usage = std::array<double, 2>;  // pick-ups, drop-offs

// One prediction input. Heatmaps are center-normalized but otherwise raw
// (models apply their stored channel scales); usage is already divided by
// the station scale; externals are raw and hold lookback + 1 vectors, the
// last one belonging to the target interval.
struct InputWindow {
  std::span<const double> heatmaps;  // lookback x heatmap size
  std::span<const Usage> usage;      // lookback
  std::span<const ingest::ExternalVector> externals;
};

class Workspace {
 public:
  virtual ~Workspace() = default;
};

// Common surface of AtCoR and the baselines so training and evaluation are
// shared. Implementations are immutable during forward/backward; each
// thread uses its own Workspace.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string scheme() const = 0;
  virtual int lookback() const = 0;
  // key=value lines; equal fingerprints imply identical parameter layouts.
  virtual std::string fingerprint() const = 0;
  virtual bool trainable() const { return true; }

  virtual ParamSet& params() = 0;
  virtual const ParamSet& params() const = 0;

  virtual std::unique_ptr<Workspace> workspace() const = 0;
  // A non-null rng switches on training behaviour (dropout).
  virtual Usage forward(const InputWindow& in, Workspace& ws, Rng* rng) const = 0;
  // Accumulates d(loss)/d(params) into grad given d(loss)/d(output), using
  // the caches of the preceding forward on the same workspace.
  virtual void backward(const InputWindow& in, Workspace& ws, const Usage& dout, std::vector<double>& grad) const = 0;

  // Divisors applied to heatmap channels and external components. Zero or
  // non-finite entries are stored as 1.
  virtual void set_input_scales(std::span<const double> heatmap, std::span<const double> external);
};

// Validates window lengths; throws ShapeError, or Error when the target
// interval's external vector is missing.
void check_window(const InputWindow& in, int lookback, std::size_t heatmap_size);

}  // namespace atcor::model
