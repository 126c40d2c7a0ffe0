#include "amortss/nn/adam.hpp"

#include <cmath>

#include "amortss/core/errors.hpp"

namespace amortss::nn {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& s, double lr,
               const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw DimensionMismatchError("adam: gradient size");
  if (s.m.size() == 0) {
    s.m = Eigen::VectorXd::Zero(params.size());
    s.v = Eigen::VectorXd::Zero(params.size());
  }
  if (s.m.size() != params.size()) throw DimensionMismatchError("adam: state size");
  ++s.step;
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * grad;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  params.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + cfg.eps);
}

double lr_schedule(const std::string& model_id, std::int64_t n) {
  if (model_id == "sv") {
    if (n < 30'000) return 1e-3;
    if (n < 100'000) return 1e-4;
    return 1e-5;
  }
  if (model_id == "dsge") {
    if (n < 30'000) return 1e-3;
    if (n < 100'000) return 1e-4;
    if (n < 200'000) return 1e-5;
    if (n < 350'000) return 1e-6;
    return 3e-6;
  }
  if (model_id == "sa") {
    if (n < 15'000) return 1e-3;
    if (n < 50'000) return 1e-4;
    return 1e-5;
  }
  throw UnknownModelError(model_id);
}

}  // namespace amortss::nn
