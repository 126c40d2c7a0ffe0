#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/nn/layers.hpp"
#include "amortss/sim/dsge.hpp"
#include "amortss/sim/seasonal.hpp"

namespace amortss::train {

enum class ModelId { Sv, Dsge, Sa };

std::string model_name(ModelId id);
/// "sv", "dsge" or "sa"; throws UnknownModelError.
ModelId parse_model(const std::string& name);

/// One simulated training batch in the network's time-major layout.
struct Batch {
  Eigen::Index T = 0;
  Eigen::Index B = 0;  // members actually present (2B for the seasonal model)
  nn::RowMat x;        // network inputs [T*B x input_dim]
  nn::RowMat target;   // hidden states [T*B x K]
  nn::RowMat aux;      // auxiliary targets [T*B x A], possibly empty
  std::vector<std::uint8_t> has_break;  // seasonal only, per member
};

/// Adapter between a simulator and the network: what goes in, what is
/// predicted, and how one batch is produced.
class Problem {
 public:
  virtual ~Problem() = default;
  virtual ModelId id() const = 0;
  virtual int input_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int aux_dim() const { return 0; }
  /// Simulates a batch of `B` draws of length T. The seasonal problem
  /// returns 2B members (each draw plus its reversed twin).
  virtual Batch simulate(Eigen::Index T, Eigen::Index B, RngStream& rng) const = 0;
};

/// Stochastic volatility: input log(c + |y_t|), target SV_t.
class SvProblem : public Problem {
 public:
  explicit SvProblem(double c = sim::kLogOffset) : c_(c) {}
  ModelId id() const override { return ModelId::Sv; }
  int input_dim() const override { return 1; }
  int state_dim() const override { return 1; }
  Batch simulate(Eigen::Index T, Eigen::Index B, RngStream& rng) const override;

 private:
  double c_;
};

/// SV-DSGE: input the three observables, targets the three log-volatility
/// paths (g, z, R) with log(c + |e_t|) of the structural shocks as
/// auxiliary targets. Structural parameters come from a presimulated cache.
class DsgeProblem : public Problem {
 public:
  DsgeProblem(std::shared_ptr<const sim::DsgeSolutionCache> cache, double c = sim::kLogOffset);
  ModelId id() const override { return ModelId::Dsge; }
  int input_dim() const override { return 3; }
  int state_dim() const override { return 3; }
  int aux_dim() const override { return 3; }
  Batch simulate(Eigen::Index T, Eigen::Index B, RngStream& rng) const override;
  const sim::DsgeSolutionCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<const sim::DsgeSolutionCache> cache_;
  double c_;
};

/// Seasonal adjustment: input the standardized series, target its
/// non-seasonal component on the same scale.
class SeasonalProblem : public Problem {
 public:
  explicit SeasonalProblem(sim::SeasonalConfig cfg = {}) : cfg_(cfg) {}
  ModelId id() const override { return ModelId::Sa; }
  int input_dim() const override { return 1; }
  int state_dim() const override { return 1; }
  Batch simulate(Eigen::Index T, Eigen::Index B, RngStream& rng) const override;
  const sim::SeasonalConfig& config() const { return cfg_; }

 private:
  sim::SeasonalConfig cfg_;
};

/// Robust location/scale (median, IQR / 1.349) per column, used to put
/// network inputs and outputs on unit scale. Heavy-tailed prior draws make
/// plain moments unstable.
struct ColumnScaling {
  std::vector<double> offset;
  std::vector<double> scale;
};
ColumnScaling robust_scaling(const nn::RowMat& m);

}  // namespace amortss::train
