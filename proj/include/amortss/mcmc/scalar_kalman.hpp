#pragma once

#include <Eigen/Dense>

#include "amortss/core/rng.hpp"

namespace amortss::mcmc {

/// Scalar AR(1) state observed with heteroskedastic noise:
///   x_1 ~ N(mean, p1)
///   x_t = mean + phi (x_{t-1} - mean) + w_t,    w_t ~ N(0, q)
///   y_t = loading x_t + d_t + eps_t,            eps_t ~ N(0, h_t)
struct Ar1Model {
  double mean = 0.0;
  double phi = 0.0;
  double q = 1.0;
  double p1 = 1.0;
  double loading = 1.0;
};

double ar1_loglik(const Ar1Model& m, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                  const Eigen::VectorXd& h);

/// Forward filtering, backward sampling: one exact draw of x_{1..T} | y.
Eigen::VectorXd ar1_ffbs(const Ar1Model& m, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                         const Eigen::VectorXd& h, RngStream& rng);

}  // namespace amortss::mcmc
