#pragma once

#include <Eigen/Dense>

namespace amortss::ssm {

/// Linear expectational difference system
///
///   lead * E_t x_{t+1} = lag * x_t,    x_t = [k_t; u_t]
///
/// where the first `n_predetermined` entries k_t are known at t and the
/// remaining u_t are free (jump) variables. Innovations enter only the
/// predetermined block: k_{t+1} - E_t k_{t+1} = shock_impact * e_{t+1}.
struct ReSystem {
  Eigen::MatrixXd lead;
  Eigen::MatrixXd lag;
  Eigen::MatrixXd shock_impact;
  Eigen::Index n_predetermined = 0;
};

enum class ReStatus { Solved, Indeterminate, NoStableSolution };

const char* to_string(ReStatus status);

/// Decision rules of the stable solution:
///   k_{t+1} = transition * k_t + impact * e_{t+1},   u_t = policy * k_t.
struct ReSolution {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd policy;
  Eigen::MatrixXd impact;
};

struct ReResult {
  ReStatus status = ReStatus::NoStableSolution;
  ReSolution solution;
  /// |lag_ii / lead_ii| of the ordered generalized Schur form (inf for
  /// infinite roots).
  Eigen::VectorXd root_moduli;
  Eigen::Index n_stable = 0;

  bool ok() const { return status == ReStatus::Solved; }
};

/// Generalized Schur (QZ) solution with stable roots ordered first.
///
/// Roots with modulus within 1e-8 of one count as unit roots and make the
/// system NoStableSolution; more stable roots than predetermined variables
/// is Indeterminate, fewer is NoStableSolution.
ReResult solve_rational_expectations(const ReSystem& system);

namespace detail {

/// Complex generalized Schur decomposition lead = Q S Z^H, lag = Q T Z^H
/// with S, T upper triangular and stable roots (|T_ii| < |S_ii|) first.
/// Exposed for testing.
struct OrderedQz {
  Eigen::MatrixXcd S;
  Eigen::MatrixXcd T;
  Eigen::MatrixXcd Q;
  Eigen::MatrixXcd Z;
  bool converged = false;
};

OrderedQz ordered_qz(const Eigen::MatrixXd& lead, const Eigen::MatrixXd& lag);

}  // namespace detail

}  // namespace amortss::ssm
