#include "amortss/ssm/dsge_system.hpp"

#include "amortss/core/errors.hpp"

namespace amortss::ssm {

namespace {

// Positions inside x_t = [k_t; u_t].
enum : Eigen::Index { xG = 0, xZ, xER, xRLag, xPiLag, xYLag, xC, xPi, kNx };
constexpr Eigen::Index kNumPredetermined = 6;

double phillips_slope(const DsgeStructuralParams& p) {
  return (1.0 - p.zeta * p.beta) * (1.0 - p.zeta) / ((1.0 + p.beta * p.iota) * p.zeta);
}

// Coefficients of R_t as a linear function of x_t.
Eigen::RowVectorXd policy_rate_row(const DsgeStructuralParams& p) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(kNx);
  const double w = 1.0 - p.rho_R;
  row(xRLag) = p.rho_R;
  row(xPi) = w * p.psi1;
  // psi2 * (y_t - y_{t-1} + z_t) with y_t = c_t + g_t
  row(xC) = w * p.psi2;
  row(xG) = w * p.psi2;
  row(xYLag) = -w * p.psi2;
  row(xZ) = w * p.psi2;
  row(xER) = 1.0;
  return row;
}

}  // namespace

ReSystem assemble_dsge_system(const DsgeStructuralParams& p) {
  ReSystem sys;
  sys.n_predetermined = kNumPredetermined;
  sys.lead = Eigen::MatrixXd::Zero(kNx, kNx);
  sys.lag = Eigen::MatrixXd::Zero(kNx, kNx);
  auto& G0 = sys.lead;
  auto& G1 = sys.lag;

  // Exogenous processes.
  G0(0, xG) = 1.0;
  G1(0, xG) = p.rho_g;
  G0(1, xZ) = 1.0;
  G1(1, xZ) = -p.phi_z;
  G0(2, xER) = 1.0;

  // Lag bookkeeping: next period's lagged values are today's R, pi, y.
  const Eigen::RowVectorXd rate = policy_rate_row(p);
  G0(3, xRLag) = 1.0;
  G1.row(3) = rate;
  G0(4, xPiLag) = 1.0;
  G1(4, xPi) = 1.0;
  G0(5, xYLag) = 1.0;
  G1(5, xC) = 1.0;
  G1(5, xG) = 1.0;

  // Euler: E c' + E z' + (1/tau) E pi' = c + (1/tau) R
  G0(6, xC) = 1.0;
  G0(6, xZ) = 1.0;
  G0(6, xPi) = 1.0 / p.tau;
  G1.row(6) = rate / p.tau;
  G1(6, xC) += 1.0;

  // Phillips: beta/(1+beta iota) E pi' = pi - iota/(1+beta iota) pi_lag - kappa (c + nu_l y)
  const double denom = 1.0 + p.beta * p.iota;
  const double kappa = phillips_slope(p);
  G0(7, xPi) = p.beta / denom;
  G1(7, xPi) = 1.0;
  G1(7, xPiLag) = -p.iota / denom;
  G1(7, xC) = -kappa * (1.0 + p.nu_l);
  G1(7, xG) = -kappa * p.nu_l;

  sys.shock_impact = Eigen::MatrixXd::Zero(kNumPredetermined, kNumDsgeShocks);
  sys.shock_impact(xG, kShockG) = p.sigma_g;
  sys.shock_impact(xZ, kShockZ) = p.sigma_z;
  sys.shock_impact(xER, kShockR) = p.sigma_R;
  return sys;
}

DsgeSolveResult solve_linear_re(const DsgeStructuralParams& p) {
  DsgeSolveResult out;
  const ReResult re = solve_rational_expectations(assemble_dsge_system(p));
  out.status = re.status;
  if (!re.ok()) return out;

  // k_t as a function of (s_{t-1}, e_t).
  Eigen::MatrixXd KA = Eigen::MatrixXd::Zero(kNumPredetermined, kNumDsgeStates);
  KA(xG, kG) = p.rho_g;
  KA(xZ, kZ) = -p.phi_z;
  KA(xRLag, kR) = 1.0;
  KA(xPiLag, kPi) = 1.0;
  KA(xYLag, kY) = 1.0;
  const Eigen::MatrixXd& KB = re.solution.impact;

  // x_t = [I; policy] k_t, then s_t = L x_t.
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(kNx, kNumPredetermined);
  X.topRows(kNumPredetermined).setIdentity();
  X.bottomRows(kNx - kNumPredetermined) = re.solution.policy;

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(kNumDsgeStates, kNx);
  L(kC, xC) = 1.0;
  L(kG, xG) = 1.0;
  L(kY, xC) = 1.0;
  L(kY, xG) = 1.0;
  L(kPi, xPi) = 1.0;
  L.row(kR) = policy_rate_row(p);
  L(kZ, xZ) = 1.0;
  L(kDy, xC) = 1.0;
  L(kDy, xG) = 1.0;
  L(kDy, xYLag) = -1.0;
  L(kDy, xZ) = 1.0;

  const Eigen::MatrixXd M = L * X;
  out.solution.A = M * KA;
  out.solution.B = M * KB;
  return out;
}

Eigen::MatrixXd dsge_structural_residuals(const DsgeStructuralParams& p,
                                          const DsgeSolution& solution,
                                          const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& shocks) {
  if (states.cols() != kNumDsgeStates || shocks.cols() != kNumDsgeShocks ||
      shocks.rows() != states.rows()) {
    throw DimensionMismatchError("dsge_structural_residuals: expected T x 7 states, T x 3 shocks");
  }
  const Eigen::Index T = states.rows();
  const double denom = 1.0 + p.beta * p.iota;
  const double kappa = phillips_slope(p);
  Eigen::MatrixXd res(std::max<Eigen::Index>(T - 1, 0), 7);
  for (Eigen::Index t = 1; t < T; ++t) {
    const Eigen::VectorXd s = states.row(t).transpose();
    const Eigen::VectorXd lag = states.row(t - 1).transpose();
    const Eigen::VectorXd next = solution.A * s;
    const Eigen::VectorXd e = shocks.row(t).transpose();
    const Eigen::Index r = t - 1;
    res(r, 0) = s(kC) - (next(kC) + next(kZ)) + (s(kR) - next(kPi)) / p.tau;
    res(r, 1) = s(kPi) - p.iota / denom * lag(kPi) - p.beta / denom * next(kPi) -
                kappa * (s(kC) + p.nu_l * s(kY));
    res(r, 2) = s(kY) - s(kC) - s(kG);
    res(r, 3) = s(kR) - p.rho_R * lag(kR) -
                (1.0 - p.rho_R) * (p.psi1 * s(kPi) + p.psi2 * (s(kY) - lag(kY) + s(kZ))) -
                p.sigma_R * e(kShockR);
    res(r, 4) = s(kZ) + p.phi_z * lag(kZ) - p.sigma_z * e(kShockZ);
    res(r, 5) = s(kG) - p.rho_g * lag(kG) - p.sigma_g * e(kShockG);
    res(r, 6) = s(kDy) - s(kY) + lag(kY) - s(kZ);
  }
  return res;
}

}  // namespace amortss::ssm
