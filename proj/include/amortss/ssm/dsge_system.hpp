#pragma once

#include <Eigen/Dense>
#include <array>
#include <string_view>

#include "amortss/ssm/re_solver.hpp"

namespace amortss::ssm {

/// Structural parameters of the small New Keynesian model with government
/// spending, technology growth and a monetary policy rule.
struct DsgeStructuralParams {
  double tau = 2.0;       // inverse intertemporal elasticity
  double nu_l = 2.0;      // inverse Frisch elasticity
  double iota = 0.5;      // price indexation
  double zeta = 0.5;      // Calvo probability
  double psi1 = 1.5;      // policy response to inflation
  double psi2 = 0.12;     // policy response to growth
  double beta = 0.9975;   // discount factor
  double pi_star = 1.0062;
  double gamma = 1.004;   // gross trend growth
  double rho_R = 0.5;
  double rho_g = 0.5;
  double phi_z = 0.0;
  double sigma_R = 0.001;
  double sigma_g = 0.01;
  double sigma_z = 0.01;
};

/// State ordering of the solved model s_t = {y, c, g, pi, R, z, dy}.
enum DsgeState : Eigen::Index { kY = 0, kC, kG, kPi, kR, kZ, kDy, kNumDsgeStates };
/// Shock ordering e_t = {g, z, R}.
enum DsgeShock : Eigen::Index { kShockG = 0, kShockZ, kShockR, kNumDsgeShocks };

inline constexpr std::array<std::string_view, kNumDsgeStates> kDsgeStateNames{
    "y", "c", "g", "pi", "R", "z", "dy"};
inline constexpr std::array<std::string_view, kNumDsgeShocks> kDsgeShockNames{"g", "z", "R"};

/// s_t = A s_{t-1} + B e_t with unit-variance shocks e_t.
struct DsgeSolution {
  Eigen::MatrixXd A;  // 7 x 7
  Eigen::MatrixXd B;  // 7 x 3
};

struct DsgeSolveResult {
  ReStatus status = ReStatus::NoStableSolution;
  DsgeSolution solution;
  bool ok() const { return status == ReStatus::Solved; }
};

/// Expectational system in the variables
///   k_t = {g_t, z_t, eR_t, R_{t-1}, pi_{t-1}, y_{t-1}},  u_t = {c_t, pi_t},
/// where eR_t = sigma_R e^R_t is carried as a predetermined state so the
/// lead matrix stays non-singular.
ReSystem assemble_dsge_system(const DsgeStructuralParams& theta);

/// Solves the structural model and maps the decision rules onto the
/// seven-variable state vector.
DsgeSolveResult solve_linear_re(const DsgeStructuralParams& theta);

/// Residuals of the seven structural equations along a path, with
/// conditional expectations replaced by A s_t. Row i holds period i+1 of
/// `states` (the first period has no lag). Columns are ordered
/// Euler, Phillips, resource, policy, z, g, dy.
Eigen::MatrixXd dsge_structural_residuals(const DsgeStructuralParams& theta,
                                          const DsgeSolution& solution,
                                          const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& shocks);

}  // namespace amortss::ssm
