#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "amortss/core/rng.hpp"

namespace amortss::mcmc {

/// Mixture random-walk proposal
///   0.95 N(theta, c^2 / k * Sigma_n) + 0.05 N(theta, 0.01^2 / k * I)
/// where Sigma_n is the running covariance of the chain (Sigma_0 until
/// d + 2 draws have been recorded, then the empirical covariance plus
/// 1e-10 I) and k is the per-sampler divisor.
class AdaptiveProposal {
 public:
  AdaptiveProposal(int dim, double divisor, double c = 1.5, double sigma0 = 0.1);

  Eigen::VectorXd propose(const Eigen::VectorXd& current, RngStream& rng) const;
  /// Adds one chain state to the running moments.
  void record(const Eigen::VectorXd& x);

  Eigen::MatrixXd covariance() const;
  std::int64_t count() const { return n_; }
  int dim() const { return dim_; }

  double main_weight = 0.95;
  double fixed_std = 0.01;

 private:
  void refresh_factor();

  int dim_;
  double divisor_;
  double c_;
  Eigen::MatrixXd sigma0_;
  std::int64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
  Eigen::MatrixXd factor_;  // Cholesky factor of c^2 / k * Sigma_n
};

struct RwmhStep {
  Eigen::VectorXd theta;
  double log_target;
  bool accepted;
};

/// One symmetric random-walk Metropolis step; records the resulting state
/// in the proposal. A proposal with log-target -inf is simply rejected.
RwmhStep rwmh_adaptive_step(const Eigen::VectorXd& current, double current_log_target,
                            const std::function<double(const Eigen::VectorXd&)>& log_target,
                            AdaptiveProposal& proposal, RngStream& rng);

}  // namespace amortss::mcmc
