#include <gtest/gtest.h>

#include <complex>

#include "amortss/ssm/dsge_system.hpp"
#include "amortss/ssm/lyapunov.hpp"
#include "amortss/ssm/re_solver.hpp"
#include "oracles.hpp"

using namespace amortss;
using namespace amortss::ssm;
using Eigen::MatrixXd;

TEST(ReSolver, PureBackwardSystem) {
  ReSystem sys;
  sys.lead = MatrixXd::Constant(1, 1, 1.0);
  sys.lag = MatrixXd::Constant(1, 1, 0.9);
  sys.shock_impact = MatrixXd::Constant(1, 1, 2.0);
  sys.n_predetermined = 1;
  const auto r = solve_rational_expectations(sys);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.solution.transition(0, 0), 0.9, 1e-14);
  EXPECT_NEAR(r.solution.impact(0, 0), 2.0, 1e-14);
}

TEST(ReSolver, UnitRootRejected) {
  ReSystem sys;
  sys.lead = MatrixXd::Identity(2, 2);
  sys.lag = MatrixXd::Identity(2, 2);
  sys.lag(1, 1) = 2.0;
  sys.shock_impact = MatrixXd::Ones(1, 1);
  sys.n_predetermined = 1;
  EXPECT_EQ(solve_rational_expectations(sys).status, ReStatus::NoStableSolution);
}

TEST(ReSolver, OrderedQzReconstructs) {
  RngStream rng(3, 3);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = rng.uniform_int(2, 9);
    const MatrixXd a = oracle::random_matrix(n, n, rng);
    const MatrixXd b = oracle::random_matrix(n, n, rng);
    const auto qz = detail::ordered_qz(a, b);
    ASSERT_TRUE(qz.converged);
    const Eigen::MatrixXcd A = qz.Q * qz.S * qz.Z.adjoint();
    const Eigen::MatrixXcd B = qz.Q * qz.T * qz.Z.adjoint();
    EXPECT_LT((A - a.cast<std::complex<double>>()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((B - b.cast<std::complex<double>>()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(qz.S.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(qz.T.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff(), 1e-12);
    bool seen_unstable = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool unstable = std::abs(qz.T(i, i)) > std::abs(qz.S(i, i));
      if (seen_unstable) {
        EXPECT_TRUE(unstable);
      }
      seen_unstable = seen_unstable || unstable;
    }
  }
}

namespace {

// With no indexation, no smoothing, no growth response and the exogenous
// blocks switched off, the model reduces to the two forward equations in
// (c, pi). It is determinate iff both roots of that 2x2 system are outside
// the unit circle.
bool reduced_nk_determinate(const DsgeStructuralParams& p) {
  const double kappa = (1 - p.zeta * p.beta) * (1 - p.zeta) / p.zeta;
  MatrixXd g0(2, 2), g1(2, 2);
  g0 << 1.0, 1.0 / p.tau, 0.0, p.beta;
  g1 << 1.0, p.psi1 / p.tau, -kappa * (1.0 + p.nu_l), 1.0;
  const Eigen::VectorXcd roots = Eigen::EigenSolver<MatrixXd>(g0.inverse() * g1).eigenvalues();
  return roots.cwiseAbs().minCoeff() > 1.0;
}

}  // namespace

TEST(DsgeSolver, TaylorPrincipleRootCounting) {
  DsgeStructuralParams p;
  p.iota = 0.0;
  p.rho_R = 0.0;
  p.psi2 = 0.0;
  int determinate = 0, indeterminate = 0;
  for (double psi1 = 0.05; psi1 < 3.0; psi1 += 0.0731) {
    p.psi1 = psi1;
    const auto r = solve_linear_re(p);
    if (reduced_nk_determinate(p)) {
      EXPECT_EQ(r.status, ReStatus::Solved) << "psi1=" << psi1;
      ++determinate;
    } else {
      EXPECT_EQ(r.status, ReStatus::Indeterminate) << "psi1=" << psi1;
      ++indeterminate;
    }
  }
  EXPECT_GT(determinate, 0);
  EXPECT_GT(indeterminate, 0);
  p.psi1 = 0.2;
  EXPECT_EQ(solve_linear_re(p).status, ReStatus::Indeterminate);
}

TEST(DsgeSolver, StructuralResidualsOnSimulatedPaths) {
  RngStream rng(10, 10);
  int solved = 0;
  for (int rep = 0; rep < 40; ++rep) {
    DsgeStructuralParams p;
    p.tau = rng.uniform(0.5, 3.0);
    p.nu_l = rng.uniform(0.5, 3.0);
    p.iota = rng.uniform(0.05, 0.95);
    p.zeta = rng.uniform(0.2, 0.9);
    p.psi1 = rng.uniform(1.1, 2.5);
    p.psi2 = rng.uniform(0.0, 0.3);
    p.beta = rng.uniform(0.98, 0.999);
    p.rho_R = rng.uniform(0.0, 0.95);
    p.rho_g = rng.uniform(0.0, 0.95);
    p.phi_z = rng.uniform(-0.95, 0.95);
    p.sigma_R = rng.uniform(0.001, 0.01);
    p.sigma_g = rng.uniform(0.001, 0.02);
    p.sigma_z = rng.uniform(0.001, 0.02);
    const auto r = solve_linear_re(p);
    if (!r.ok()) continue;
    ++solved;
    const auto& sol = r.solution;
    ASSERT_EQ(sol.A.rows(), 7);
    ASSERT_EQ(sol.B.cols(), 3);
    EXPECT_LT(spectral_radius(sol.A), 1.0);
    const Eigen::Index T = 60;
    MatrixXd s(T, 7), e(T, 3);
    Eigen::VectorXd st = Eigen::VectorXd::Zero(7);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int k = 0; k < 3; ++k) e(t, k) = rng.normal();
      st = sol.A * st + sol.B * e.row(t).transpose();
      s.row(t) = st.transpose();
    }
    const MatrixXd res = dsge_structural_residuals(p, sol, s, e);
    EXPECT_LT(res.cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_GT(solved, 20);
}

TEST(DsgeSolver, ResidualOracleDetectsWrongSolution) {
  DsgeStructuralParams p;
  auto r = solve_linear_re(p);
  ASSERT_TRUE(r.ok());
  auto bad = r.solution;
  bad.A(kC, kG) += 0.01;
  RngStream rng(4, 0);
  MatrixXd s(20, 7), e(20, 3);
  Eigen::VectorXd st = Eigen::VectorXd::Zero(7);
  for (Eigen::Index t = 0; t < 20; ++t) {
    for (int k = 0; k < 3; ++k) e(t, k) = rng.normal();
    st = bad.A * st + bad.B * e.row(t).transpose();
    s.row(t) = st.transpose();
  }
  EXPECT_GT(dsge_structural_residuals(p, bad, s, e).cwiseAbs().maxCoeff(), 1e-6);
}
