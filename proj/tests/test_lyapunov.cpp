#include <gtest/gtest.h>

#include "amortss/ssm/lyapunov.hpp"
#include "oracles.hpp"

using namespace amortss;
using namespace amortss::ssm;
using Eigen::MatrixXd;

TEST(Lyapunov, Scalar) {
  const MatrixXd P = solve_discrete_lyapunov(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 1.0));
  EXPECT_NEAR(P(0, 0), 4.0 / 3.0, 1e-15);
}

TEST(Lyapunov, ZeroTransition) {
  RngStream rng(1, 1);
  const MatrixXd Q = oracle::random_spd(4, rng);
  const MatrixXd P = solve_discrete_lyapunov(MatrixXd::Zero(4, 4), Q);
  EXPECT_LT((P - Q).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lyapunov, ResidualOnRandomStableSystems) {
  RngStream rng(2, 2);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = rng.uniform_int(1, 16);
    const MatrixXd A = oracle::random_stable(n, rng, rng.uniform(0.0, 0.99));
    const MatrixXd B = oracle::random_matrix(n, rng.uniform_int(1, n), rng);
    const MatrixXd Q = B * B.transpose();
    const MatrixXd P = solve_discrete_lyapunov(A, Q);
    const double res = (P - A * P * A.transpose() - Q).norm();
    EXPECT_LE(res, 1e-10 * (1.0 + P.norm())) << "n=" << n;
    EXPECT_EQ(P, P.transpose());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(P).eigenvalues().minCoeff(), -1e-10 * P.norm());
  }
}

TEST(Lyapunov, UnstableThrows) {
  MatrixXd A(2, 2);
  A << 1.0, 0.3, 0.0, 0.2;
  EXPECT_THROW(solve_discrete_lyapunov(A, MatrixXd::Identity(2, 2)), UnstableSystemError);
  A(0, 0) = 1.0 - 1e-10;
  EXPECT_THROW(solve_discrete_lyapunov(A, MatrixXd::Identity(2, 2)), UnstableSystemError);
}
