#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "amortss/ssm/kalman.hpp"
#include "oracles.hpp"

using namespace amortss;
using namespace amortss::ssm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearGaussianSsmd scalar_model() {
  LinearGaussianSsmd m;
  m.A = MatrixXd::Constant(1, 1, 1.0);
  m.B = MatrixXd::Constant(1, 1, 1.0);
  m.Q = MatrixXd::Constant(1, 1, 1.0);
  m.C = MatrixXd::Constant(1, 1, 1.0);
  m.d = VectorXd::Zero(1);
  m.H = MatrixXd::Constant(1, 1, 1.0);
  m.P1 = MatrixXd::Constant(1, 1, 1.0);
  m.a1 = VectorXd::Zero(1);
  return m;
}

LinearGaussianSsmd noise_free_model(Eigen::Index n) {
  LinearGaussianSsmd m;
  m.A = 0.5 * MatrixXd::Identity(n, n);
  m.B = MatrixXd::Zero(n, n);
  m.Q = MatrixXd::Identity(n, n);
  m.C = MatrixXd::Identity(n, n);
  m.d = VectorXd::Zero(n);
  m.H = MatrixXd::Zero(n, n);
  m.P1 = MatrixXd::Identity(n, n);
  m.a1 = VectorXd::Zero(n);
  return m;
}

}  // namespace

TEST(KalmanFilter, ScalarConjugateUpdate) {
  MatrixXd y(1, 1);
  y << 2.0;
  const auto f = kalman_filter(scalar_model(), y);
  EXPECT_NEAR(f.filtered_means(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(f.filtered_covs[0](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(f.loglik, -0.5 * std::log(4.0 * std::numbers::pi) - 1.0, 1e-14);
  EXPECT_NEAR(f.loglik, -2.26551, 1e-5);
}

TEST(KalmanFilter, MatchesJointGaussian) {
  RngStream rng(2024, 1);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = rng.uniform_int(1, 3), p = rng.uniform_int(1, 3),
                       m = rng.uniform_int(1, 3), T = rng.uniform_int(1, 6);
    const auto model = oracle::random_model(n, p, m, T, rng, rep % 2 == 1);
    const MatrixXd y = oracle::simulate_obs(model, T, rng);
    const auto joint = oracle::joint_moments(model, T);
    const double ref = oracle::mvn_logpdf(oracle::stack_rows(y), joint.mean_y, joint.cov_yy);
    const auto f = kalman_filter(model, y);
    EXPECT_NEAR(f.loglik, ref, 1e-8 * (1.0 + std::abs(ref)));
    EXPECT_NEAR(kalman_loglik(model, y), f.loglik, 1e-12 * (1.0 + std::abs(ref)));

    // Filtered moments at the last period equal the smoothed ones of the
    // brute force, conditioning on everything observed.
    const auto cond = oracle::condition_on_obs(joint, oracle::stack_rows(y));
    const VectorXd last = cond.mean.tail(n);
    EXPECT_LT((f.filtered_means.row(T - 1).transpose() - last).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((f.filtered_covs[T - 1] - cond.cov.bottomRightCorner(n, n)).cwiseAbs().maxCoeff(),
              1e-8);
  }
}

TEST(KalmanFilter, NoiseFreeObservesStates) {
  const auto model = noise_free_model(2);
  MatrixXd y(3, 2);
  y << 1.0, -1.0, 0.5, -0.5, 0.25, -0.25;
  const auto f = kalman_filter(model, y);
  EXPECT_LT((f.filtered_means - y).cwiseAbs().maxCoeff(), 1e-12);
  const auto s = kalman_smoother(model, y);
  EXPECT_LT((s.smoothed_means - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KalmanFilter, ImpossibleObservationThrows) {
  const auto model = noise_free_model(1);
  MatrixXd y(2, 1);
  y << 1.0, 2.0;  // the state must halve, so 2.0 has zero density
  EXPECT_THROW(kalman_filter(model, y), SingularInnovationError);
}

TEST(KalmanFilter, ConstantPathEqualsConstantQ) {
  RngStream rng(5, 5);
  const Eigen::Index T = 6;
  auto model = oracle::random_model(3, 2, 2, T, rng, false);
  const MatrixXd y = oracle::simulate_obs(model, T, rng);
  const auto a = kalman_filter(model, y);
  auto tv = model;
  tv.q_path.assign(T, model.Q);
  const auto b = kalman_filter(tv, y);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_TRUE(a.filtered_means == b.filtered_means);
}

TEST(KalmanSmoother, MatchesJointGaussian) {
  RngStream rng(77, 2);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = rng.uniform_int(1, 3), p = rng.uniform_int(1, 3),
                       m = rng.uniform_int(1, 3), T = rng.uniform_int(1, 6);
    const auto model = oracle::random_model(n, p, m, T, rng, rep % 3 == 0);
    const MatrixXd y = oracle::simulate_obs(model, T, rng);
    const auto joint = oracle::joint_moments(model, T);
    const auto cond = oracle::condition_on_obs(joint, oracle::stack_rows(y));
    const auto s = kalman_smoother(model, y);
    for (Eigen::Index t = 0; t < T; ++t) {
      EXPECT_LT((s.smoothed_means.row(t).transpose() - cond.mean.segment(t * n, n))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-8);
      EXPECT_LT((s.smoothed_covs[t] - cond.cov.block(t * n, t * n, n, n)).cwiseAbs().maxCoeff(),
                1e-8);
    }
  }
}

TEST(KalmanSmoother, SingleStepEqualsFilter) {
  RngStream rng(8, 8);
  const auto model = oracle::random_model(2, 2, 1, 1, rng, false);
  const MatrixXd y = oracle::simulate_obs(model, 1, rng);
  const auto f = kalman_filter(model, y);
  const auto s = kalman_smoother(model, y);
  EXPECT_LT((f.filtered_means - s.smoothed_means).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((f.filtered_covs[0] - s.smoothed_covs[0]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KalmanSmoother, SmoothedCovBelowFiltered) {
  RngStream rng(9, 1);
  const Eigen::Index T = 6;
  const auto model = oracle::random_model(3, 2, 2, T, rng, true);
  const MatrixXd y = oracle::simulate_obs(model, T, rng);
  const auto f = kalman_filter(model, y);
  const auto s = kalman_smoother(model, y);
  for (Eigen::Index t = 0; t < T; ++t) {
    const MatrixXd diff = f.filtered_covs[t] - s.smoothed_covs[t];
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(diff);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(f.filtered_covs[t]).eigenvalues().minCoeff(),
              -1e-12);
  }
}

TEST(SimulationSmoother, MomentsMatchSmoother) {
  RngStream rng(31, 0);
  const Eigen::Index T = 5, n = 2;
  const auto model = oracle::random_model(n, 1, 2, T, rng, false);
  const MatrixXd y = oracle::simulate_obs(model, T, rng);
  const auto s = kalman_smoother(model, y);
  SimulationSmoother<double> sim(model, y);
  const int N = 20000;
  const Eigen::Index d = T * n;
  VectorXd sum = VectorXd::Zero(d);
  MatrixXd sum2 = MatrixXd::Zero(d, d);
  RngStream draws = rng.derive("draws");
  for (int i = 0; i < N; ++i) {
    const VectorXd x = oracle::stack_rows(sim.draw(draws));
    sum += x;
    sum2.noalias() += x * x.transpose();
  }
  const VectorXd mean = sum / N;
  const MatrixXd cov = sum2 / N - mean * mean.transpose();
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var = s.smoothed_covs[t](i, i);
      EXPECT_LT(std::abs(mean(t * n + i) - s.smoothed_means(t, i)), 4.0 * std::sqrt(var / N));
      for (Eigen::Index j = 0; j < n; ++j) {
        const double vij = s.smoothed_covs[t](i, j);
        const double se = std::sqrt((var * s.smoothed_covs[t](j, j) + vij * vij) / N);
        EXPECT_LT(std::abs(cov(t * n + i, t * n + j) - vij), 4.0 * se);
      }
    }
  }
}

TEST(SimulationSmoother, NoiseFreeDrawsEqualObs) {
  const auto model = noise_free_model(2);
  MatrixXd y(3, 2);
  y << 1.0, -1.0, 0.5, -0.5, 0.25, -0.25;
  RngStream rng(4, 4);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT((simulation_smoother(model, y, rng) - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}
