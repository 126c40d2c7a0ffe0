#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace amortss::nn {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected ADAM update. Moments are sized on first use.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// Piecewise-constant learning rate for model "sv", "dsge" or "sa" at
/// optimizer step n, counted from 1. Throws UnknownModelError otherwise.
double lr_schedule(const std::string& model_id, std::int64_t n);

}  // namespace amortss::nn
