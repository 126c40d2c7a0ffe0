#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "amortss/core/rng.hpp"

namespace amortss::sim {

/// Which indicator pattern re-initializes the seasonal recursion.
enum class BreakTrigger {
  Single,   // z_t = I_t
  Product,  // z_t = I_{t-3} I_{t-2} I_{t-1} I_t
};

struct SeasonalConfig {
  int T_lb = 40;
  int T_ub = 80;
  int burn_in = 200;
  double break_prob = 0.01;
  double shift_prob = 0.01;
  BreakTrigger trigger = BreakTrigger::Single;
  /// Multiplies the random seasonal scale; 0 removes seasonality.
  double seasonal_scale_multiplier = 1.0;
};

struct SeasonalSample {
  Eigen::VectorXd y;   // standardized observed series
  Eigen::VectorXd sa;  // non-seasonal component on the same scale
  std::vector<std::uint8_t> break_flags;
  /// Moments removed by the standardization.
  double mean = 0.0;
  double std = 1.0;

  bool has_break() const;
};

int seasonal_draw_length(const SeasonalConfig& config, RngStream& rng);

/// One series of the given retained length (burn-in generated and dropped).
SeasonalSample seasonal_generate(int T, const SeasonalConfig& config, RngStream& rng);

/// 2B samples of a common length: B generated series followed by their
/// time reversals. Member b uses rng.derive("seasonal", b).
std::vector<SeasonalSample> seasonal_generate_batch(int B, int T, const SeasonalConfig& config,
                                                    const RngStream& rng);
/// Draws the common length first.
std::vector<SeasonalSample> seasonal_generate_batch(int B, const SeasonalConfig& config,
                                                    RngStream& rng);

SeasonalSample reversed(const SeasonalSample& sample);

}  // namespace amortss::sim
