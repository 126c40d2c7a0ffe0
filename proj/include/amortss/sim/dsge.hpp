#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/sim/priors.hpp"
#include "amortss/sim/sv.hpp"
#include "amortss/ssm/dsge_system.hpp"

namespace amortss::sim {

inline constexpr int kNumStructural = 15;
inline constexpr int kNumSvProcess = 6;

/// Log-volatility processes of the three structural shocks, ordered (g, z, R):
///   SV^i_1 ~ N(0, sigma_i / sqrt(1 - rho_i^2)),  SV^i_t ~ N(rho_i SV^i_{t-1}, sigma_i).
struct SvProcessParams {
  std::array<double, 3> sigma{0.25, 0.25, 0.25};
  std::array<double, 3> rho{0.9, 0.9, 0.9};
};

struct DsgeParams {
  ssm::DsgeStructuralParams theta;
  SvProcessParams sv;
};

/// Priors of the quantities the structural parameters are drawn through,
/// e.g. -400 log(beta) or (100 sigma_R)^2. Entry order matches
/// to_prior_vars().
const std::array<PriorSpec, kNumStructural>& dsge_structural_priors();
/// (0.2 sigma_i)^2 for i = g, z, R, then rho_i for i = g, z, R.
const std::array<PriorSpec, kNumSvProcess>& dsge_sv_priors();

std::array<double, kNumStructural> to_prior_vars(const ssm::DsgeStructuralParams& theta);
ssm::DsgeStructuralParams from_prior_vars(const std::array<double, kNumStructural>& v);
std::array<double, kNumSvProcess> to_prior_vars(const SvProcessParams& sv);
SvProcessParams sv_from_prior_vars(const std::array<double, kNumSvProcess>& v);

ssm::DsgeStructuralParams dsge_draw_structural(RngStream& rng);
SvProcessParams dsge_draw_sv_process(RngStream& rng);
DsgeParams dsge_draw_prior(RngStream& rng);

/// Prior log densities of the parameters, measured in the prior variables
/// (see dsge_structural_priors). -inf outside the support.
double dsge_structural_log_prior(const ssm::DsgeStructuralParams& theta);
double dsge_sv_log_prior(const SvProcessParams& sv);

/// One stable solution with its stationary covariance P = A P A' + B B'.
struct DsgeCacheEntry {
  ssm::DsgeStructuralParams theta;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd P;
  Eigen::MatrixXd P_factor;  // L with L L' = P
};

struct DsgeSolutionCache {
  std::vector<DsgeCacheEntry> entries;
  std::uint64_t draws = 0;
  std::uint64_t indeterminate = 0;
  std::uint64_t no_stable = 0;

  double acceptance_rate() const {
    return draws == 0 ? 0.0 : static_cast<double>(entries.size()) / static_cast<double>(draws);
  }
};

/// Solves and stores the solution of a single parameter draw; nullopt-like
/// false return when the solver or the stationary covariance fails.
bool make_cache_entry(const ssm::DsgeStructuralParams& theta, DsgeCacheEntry& out,
                      ssm::ReStatus* status = nullptr);

/// Keeps drawing from the prior until `n` stable solutions are stored.
DsgeSolutionCache dsge_presimulate(std::size_t n, RngStream& rng);

struct DsgePath {
  Eigen::MatrixXd sv;       // T x 3, (g, z, R)
  Eigen::MatrixXd shocks;   // T x 3, e_t with std exp(SV_t / 2)
  Eigen::MatrixXd e_tilde;  // T x 3, log(c + |e_t|)
  Eigen::MatrixXd states;   // T x 7
  Eigen::MatrixXd obs;      // T x 3
};

/// The state starts from s_0 ~ N(0, P) and then follows
/// s_t = A s_{t-1} + B e_t for t = 1..T.
DsgePath dsge_simulate(const DsgeCacheEntry& entry, const SvProcessParams& sv, Eigen::Index T,
                       RngStream& rng, double c = kLogOffset);

/// Measurement intercepts (100 log gamma, 100 log pi*, 100 (log gamma + log pi* - log beta)).
Eigen::Vector3d dsge_intercept(const ssm::DsgeStructuralParams& theta);
/// Observation loading: obs = intercept + C s.
Eigen::MatrixXd dsge_obs_loading();
Eigen::Vector3d dsge_observe(const Eigen::VectorXd& state, const ssm::DsgeStructuralParams& theta);

}  // namespace amortss::sim
