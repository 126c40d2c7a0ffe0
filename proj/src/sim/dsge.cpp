#include "amortss/sim/dsge.hpp"

#include <cmath>

#include "amortss/ssm/kalman.hpp"
#include "amortss/ssm/lyapunov.hpp"

namespace amortss::sim {

using ssm::DsgeStructuralParams;

const std::array<PriorSpec, kNumStructural>& dsge_structural_priors() {
  static const std::array<PriorSpec, kNumStructural> priors{{
      {"tau", PriorFamily::Normal, 1.5, 0.36, 0.0},
      {"nu_l", PriorFamily::Gamma, 2.0, 0.75},
      {"iota", PriorFamily::Beta, 0.5, 0.15},
      {"zeta", PriorFamily::Beta, 0.5, 0.1},
      {"psi1", PriorFamily::Normal, 1.5, 0.25},
      {"psi2", PriorFamily::Normal, 0.12, 0.05},
      {"-400log(beta)", PriorFamily::Gamma, 1.0, 0.4},
      {"400log(pi*)", PriorFamily::Gamma, 2.48, 0.4},
      {"100log(gamma)", PriorFamily::Normal, 0.4, 0.1},
      {"rho_R", PriorFamily::Beta, 0.5, 0.2},
      {"rho_g", PriorFamily::Beta, 0.5, 0.2},
      {"phi_z", PriorFamily::Uniform, -1.0, 1.0},
      {"(100sigma_R)^2", PriorFamily::InvGamma, 0.1, 2.0},
      {"(10sigma_g)^2", PriorFamily::InvGamma, 0.1, 2.0},
      {"(10sigma_z)^2", PriorFamily::InvGamma, 0.1, 2.0},
  }};
  return priors;
}

const std::array<PriorSpec, kNumSvProcess>& dsge_sv_priors() {
  static const std::array<PriorSpec, kNumSvProcess> priors{{
      {"(0.2sigma_g^SV)^2", PriorFamily::InvGamma, 0.05, 2.0},
      {"(0.2sigma_z^SV)^2", PriorFamily::InvGamma, 0.05, 2.0},
      {"(0.2sigma_R^SV)^2", PriorFamily::InvGamma, 0.05, 2.0},
      {"rho_g^SV", PriorFamily::Normal, 0.9, 0.07, -1.0, 1.0},
      {"rho_z^SV", PriorFamily::Normal, 0.9, 0.07, -1.0, 1.0},
      {"rho_R^SV", PriorFamily::Normal, 0.9, 0.07, -1.0, 1.0},
  }};
  return priors;
}

std::array<double, kNumStructural> to_prior_vars(const DsgeStructuralParams& p) {
  return {p.tau,
          p.nu_l,
          p.iota,
          p.zeta,
          p.psi1,
          p.psi2,
          -400.0 * std::log(p.beta),
          400.0 * std::log(p.pi_star),
          100.0 * std::log(p.gamma),
          p.rho_R,
          p.rho_g,
          p.phi_z,
          std::pow(100.0 * p.sigma_R, 2),
          std::pow(10.0 * p.sigma_g, 2),
          std::pow(10.0 * p.sigma_z, 2)};
}

DsgeStructuralParams from_prior_vars(const std::array<double, kNumStructural>& v) {
  DsgeStructuralParams p;
  p.tau = v[0];
  p.nu_l = v[1];
  p.iota = v[2];
  p.zeta = v[3];
  p.psi1 = v[4];
  p.psi2 = v[5];
  p.beta = std::exp(-v[6] / 400.0);
  p.pi_star = std::exp(v[7] / 400.0);
  p.gamma = std::exp(v[8] / 100.0);
  p.rho_R = v[9];
  p.rho_g = v[10];
  p.phi_z = v[11];
  p.sigma_R = std::sqrt(v[12]) / 100.0;
  p.sigma_g = std::sqrt(v[13]) / 10.0;
  p.sigma_z = std::sqrt(v[14]) / 10.0;
  return p;
}

std::array<double, kNumSvProcess> to_prior_vars(const SvProcessParams& sv) {
  std::array<double, kNumSvProcess> v{};
  for (int i = 0; i < 3; ++i) {
    v[i] = std::pow(0.2 * sv.sigma[i], 2);
    v[3 + i] = sv.rho[i];
  }
  return v;
}

SvProcessParams sv_from_prior_vars(const std::array<double, kNumSvProcess>& v) {
  SvProcessParams sv;
  for (int i = 0; i < 3; ++i) {
    sv.sigma[i] = std::sqrt(v[i]) / 0.2;
    sv.rho[i] = v[3 + i];
  }
  return sv;
}

DsgeStructuralParams dsge_draw_structural(RngStream& rng) {
  std::array<double, kNumStructural> v{};
  const auto& priors = dsge_structural_priors();
  for (int i = 0; i < kNumStructural; ++i) v[i] = prior_draw(priors[i], rng);
  return from_prior_vars(v);
}

SvProcessParams dsge_draw_sv_process(RngStream& rng) {
  std::array<double, kNumSvProcess> v{};
  const auto& priors = dsge_sv_priors();
  for (int i = 0; i < kNumSvProcess; ++i) v[i] = prior_draw(priors[i], rng);
  return sv_from_prior_vars(v);
}

DsgeParams dsge_draw_prior(RngStream& rng) {
  DsgeParams p;
  p.theta = dsge_draw_structural(rng);
  p.sv = dsge_draw_sv_process(rng);
  return p;
}

double dsge_structural_log_prior(const DsgeStructuralParams& theta) {
  const auto v = to_prior_vars(theta);
  const auto& priors = dsge_structural_priors();
  double lp = 0.0;
  for (int i = 0; i < kNumStructural; ++i) lp += prior_log_density(priors[i], v[i]);
  return lp;
}

double dsge_sv_log_prior(const SvProcessParams& sv) {
  const auto v = to_prior_vars(sv);
  const auto& priors = dsge_sv_priors();
  double lp = 0.0;
  for (int i = 0; i < kNumSvProcess; ++i) lp += prior_log_density(priors[i], v[i]);
  return lp;
}

bool make_cache_entry(const DsgeStructuralParams& theta, DsgeCacheEntry& out,
                      ssm::ReStatus* status) {
  const auto solved = ssm::solve_linear_re(theta);
  if (status) *status = solved.status;
  if (!solved.ok()) return false;
  out.theta = theta;
  out.A = solved.solution.A;
  out.B = solved.solution.B;
  try {
    out.P = ssm::solve_discrete_lyapunov(out.A, out.B * out.B.transpose());
  } catch (const UnstableSystemError&) {
    if (status) *status = ssm::ReStatus::NoStableSolution;
    return false;
  }
  out.P_factor = ssm::psd_factor<double>(out.P);
  return true;
}

DsgeSolutionCache dsge_presimulate(std::size_t n, RngStream& rng) {
  DsgeSolutionCache cache;
  cache.entries.reserve(n);
  while (cache.entries.size() < n) {
    RngStream draw_rng = rng.derive("presim", cache.draws);
    ++cache.draws;
    DsgeCacheEntry entry;
    ssm::ReStatus status;
    if (make_cache_entry(dsge_draw_structural(draw_rng), entry, &status)) {
      cache.entries.push_back(std::move(entry));
    } else if (status == ssm::ReStatus::Indeterminate) {
      ++cache.indeterminate;
    } else {
      ++cache.no_stable;
    }
  }
  return cache;
}

Eigen::Vector3d dsge_intercept(const DsgeStructuralParams& p) {
  const double lg = std::log(p.gamma), lp = std::log(p.pi_star), lb = std::log(p.beta);
  return {100.0 * lg, 100.0 * lp, 100.0 * (lg + lp - lb)};
}

Eigen::MatrixXd dsge_obs_loading() {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, ssm::kNumDsgeStates);
  C(0, ssm::kDy) = 100.0;
  C(1, ssm::kPi) = 100.0;
  C(2, ssm::kR) = 100.0;
  return C;
}

Eigen::Vector3d dsge_observe(const Eigen::VectorXd& s, const DsgeStructuralParams& p) {
  return dsge_intercept(p) + 100.0 * Eigen::Vector3d(s(ssm::kDy), s(ssm::kPi), s(ssm::kR));
}

DsgePath dsge_simulate(const DsgeCacheEntry& entry, const SvProcessParams& sv, Eigen::Index T,
                       RngStream& rng, double c) {
  const double log_c = std::log(c);
  DsgePath out;
  out.sv.resize(T, 3);
  out.shocks.resize(T, 3);
  out.e_tilde.resize(T, 3);
  out.states.resize(T, ssm::kNumDsgeStates);
  out.obs.resize(T, 3);
  for (int i = 0; i < 3; ++i) {
    const double rho = sv.rho[i], sigma = sv.sigma[i];
    out.sv(0, i) = rng.normal(0.0, sigma / std::sqrt(1.0 - rho * rho));
    for (Eigen::Index t = 1; t < T; ++t) out.sv(t, i) = rng.normal(rho * out.sv(t - 1, i), sigma);
  }
  Eigen::VectorXd z(ssm::kNumDsgeStates);
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
  Eigen::VectorXd s = entry.P_factor * z;
  Eigen::Vector3d e;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < 3; ++i) {
      const double eps = rng.normal();
      const double half = 0.5 * out.sv(t, i);
      e(i) = std::exp(half) * eps;
      out.e_tilde(t, i) = log_add_exp(log_c, half + std::log(std::abs(eps)));
    }
    s = entry.A * s + entry.B * e;
    out.shocks.row(t) = e.transpose();
    out.states.row(t) = s.transpose();
    out.obs.row(t) = dsge_observe(s, entry.theta).transpose();
  }
  return out;
}

}  // namespace amortss::sim
