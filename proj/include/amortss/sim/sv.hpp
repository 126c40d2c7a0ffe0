#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "amortss/core/rng.hpp"
#include "amortss/core/transforms.hpp"

namespace amortss::sim {

/// Default offset inside log(c + |y|).
inline constexpr double kLogOffset = 1e-30;

/// Unconstrained SV parameters; sigma and rho are derived.
struct SvParams {
  double alpha = 0.0;
  double kappa = 0.0;
  double psi = 0.0;

  double sigma() const { return softplus(alpha); }
  double rho() const { return sigmoid(psi); }
};

/// Prior standard deviation of alpha, kappa and psi.
inline const double kSvPriorStd = std::sqrt(10.0);

SvParams sv_draw_prior(RngStream& rng);
double sv_log_prior(const SvParams& params);

struct SvPath {
  Eigen::VectorXd sv;
  /// y_t = exp(SV_t) eps_t. May overflow to inf for extreme draws; the
  /// transformed series below is always finite.
  Eigen::VectorXd y;
  /// log(c + |y_t|), evaluated without forming y_t.
  Eigen::VectorXd log_abs_y;
};

///   SV_1 ~ N(kappa/2, sigma / (2 sqrt(1 - rho^2)))
///   SV_t ~ N(kappa/2 (1 - rho) + rho SV_{t-1}, sigma / 2)
///   y_t  ~ N(0, exp(SV_t)^2)
SvPath sv_simulate(const SvParams& params, Eigen::Index T, RngStream& rng,
                   double c = kLogOffset);

/// Stationary mean and standard deviation of SV_t.
double sv_stationary_mean(const SvParams& params);
double sv_stationary_std(const SvParams& params);

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace amortss::sim
