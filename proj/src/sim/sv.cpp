#include "amortss/sim/sv.hpp"

#include <cmath>
#include <numbers>

namespace amortss::sim {

SvParams sv_draw_prior(RngStream& rng) {
  SvParams p;
  p.alpha = rng.normal(0.0, kSvPriorStd);
  p.kappa = rng.normal(0.0, kSvPriorStd);
  p.psi = rng.normal(0.0, kSvPriorStd);
  return p;
}

double sv_log_prior(const SvParams& p) {
  const double var = kSvPriorStd * kSvPriorStd;
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * var);
  return 3.0 * norm - 0.5 * (p.alpha * p.alpha + p.kappa * p.kappa + p.psi * p.psi) / var;
}

double sv_stationary_mean(const SvParams& p) { return 0.5 * p.kappa; }

double sv_stationary_std(const SvParams& p) {
  // 1 - rho evaluated as sigmoid(-psi) keeps precision when rho is near one
  return 0.5 * p.sigma() / std::sqrt(sigmoid(-p.psi) * (1.0 + p.rho()));
}

SvPath sv_simulate(const SvParams& p, Eigen::Index T, RngStream& rng, double c) {
  const double sigma = p.sigma();
  const double rho = p.rho();
  const double mu = 0.5 * p.kappa;
  const double log_c = std::log(c);
  SvPath out;
  out.sv.resize(T);
  out.y.resize(T);
  out.log_abs_y.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    out.sv(t) = t == 0 ? rng.normal(mu, sv_stationary_std(p))
                       : rng.normal(mu * (1.0 - rho) + rho * out.sv(t - 1), 0.5 * sigma);
    const double eps = rng.normal();
    out.y(t) = std::exp(out.sv(t)) * eps;
    out.log_abs_y(t) = log_add_exp(log_c, out.sv(t) + std::log(std::abs(eps)));
  }
  return out;
}

}  // namespace amortss::sim
