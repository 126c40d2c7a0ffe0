#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "amortss/core/errors.hpp"
#include "amortss/core/rng.hpp"
#include "amortss/ssm/linear_gaussian_ssm.hpp"

namespace amortss::ssm {

template <typename Scalar>
struct FilterResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar loglik;
  Matrix filtered_means;  // T x n
  std::vector<Matrix> filtered_covs;
};

template <typename Scalar>
struct SmootherResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix smoothed_means;  // T x n
  std::vector<Matrix> smoothed_covs;
};

namespace detail {

/// Inverse (or pseudo-inverse) of an innovation covariance together with
/// its log-determinant over the non-degenerate subspace.
template <typename Scalar>
struct InnovationFactor {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix inverse;
  Scalar logdet = 0;
  Eigen::Index rank = 0;

  /// Directions of F with (numerically) zero variance are dropped; the
  /// innovation must then vanish along them, otherwise the observation is
  /// impossible under the model and SingularInnovationError is thrown.
  static InnovationFactor compute(const Matrix& F, int t) {
    InnovationFactor out;
    const Eigen::Index p = F.rows();
    const Scalar scale = F.diagonal().cwiseAbs().maxCoeff();
    const Scalar tol = Scalar(1e-12) * scale;
    Eigen::LLT<Matrix> llt(F);
    if (scale > Scalar(0) && llt.info() == Eigen::Success) {
      const auto& L = llt.matrixLLT();
      const Scalar min_pivot = L.diagonal().minCoeff();
      if (min_pivot * min_pivot > tol) {
        out.inverse = llt.solve(Matrix::Identity(p, p));
        out.logdet = Scalar(2) * L.diagonal().array().log().sum();
        out.rank = p;
        return out;
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(F);
    if (eig.info() != Eigen::Success) throw SingularInnovationError(t);
    out.inverse = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const Scalar lambda = eig.eigenvalues()(i);
      if (lambda > tol && lambda > Scalar(0)) {
        const Vector u = eig.eigenvectors().col(i);
        out.inverse.noalias() += (u / lambda) * u.transpose();
        out.logdet += std::log(lambda);
        ++out.rank;
      }
    }
    out.degenerate_basis = eig.eigenvectors();
    out.degenerate_values = eig.eigenvalues();
    out.tolerance = tol;
    return out;
  }

  /// Rejects innovations with mass along zero-variance directions.
  void check_innovation(const Vector& v, int t) const {
    if (rank == inverse.rows()) return;
    const Scalar bound = Scalar(1e-8) * (Scalar(1) + v.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < degenerate_values.size(); ++i) {
      if (degenerate_values(i) > tolerance && degenerate_values(i) > Scalar(0)) continue;
      if (std::abs(degenerate_basis.col(i).dot(v)) > bound) throw SingularInnovationError(t);
    }
  }

  Matrix degenerate_basis;
  Vector degenerate_values;
  Scalar tolerance = 0;
};

/// Everything the smoothers need from the forward recursion.
template <typename Scalar>
struct ForwardPass {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar loglik = 0;
  std::vector<Vector> predicted_mean;  // a_t
  std::vector<Matrix> predicted_cov;   // P_t
  std::vector<Vector> innovation;      // v_t
  std::vector<Matrix> innovation_inv;  // F_t^{-1} (pseudo-inverse when degenerate)
  std::vector<Matrix> gain;            // P_t C' F_t^{-1}
  std::vector<Vector> filtered_mean;
  std::vector<Matrix> filtered_cov;
};

template <typename Scalar, typename ObsDerived>
ForwardPass<Scalar> forward_pass(const LinearGaussianSsm<Scalar>& model,
                                 const Eigen::MatrixBase<ObsDerived>& obs, bool store) {
  using Matrix = typename ForwardPass<Scalar>::Matrix;
  using Vector = typename ForwardPass<Scalar>::Vector;
  const Eigen::Index T = obs.rows();
  if (obs.cols() != model.obs_dim()) {
    throw DimensionMismatchError("kalman: observation width does not match C");
  }
  model.validate(T);

  ForwardPass<Scalar> fp;
  if (store) {
    fp.predicted_mean.reserve(T);
    fp.predicted_cov.reserve(T);
    fp.innovation.reserve(T);
    fp.innovation_inv.reserve(T);
    fp.gain.reserve(T);
    fp.filtered_mean.reserve(T);
    fp.filtered_cov.reserve(T);
  }
  const Scalar log2pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  Vector a = model.a1;
  Matrix P = model.P1;
  Vector af;
  Matrix Pf;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) {
      a.noalias() = model.A * af;
      P.noalias() = model.A * Pf * model.A.transpose();
      P.noalias() += model.B * model.shock_cov(t) * model.B.transpose();
      P = Scalar(0.5) * (P + P.transpose()).eval();
    }
    const Vector v = obs.row(t).transpose() - model.C * a - model.intercept(t);
    const Matrix PCt = P * model.C.transpose();
    Matrix F = model.C * PCt + model.noise_cov(t);
    F = Scalar(0.5) * (F + F.transpose()).eval();
    const auto factor = InnovationFactor<Scalar>::compute(F, static_cast<int>(t));
    factor.check_innovation(v, static_cast<int>(t));
    const Matrix K = PCt * factor.inverse;
    af = a + K * v;
    Pf = P - K * PCt.transpose();
    Pf = Scalar(0.5) * (Pf + Pf.transpose()).eval();
    fp.loglik -= Scalar(0.5) * (Scalar(factor.rank) * log2pi + factor.logdet +
                                v.dot(factor.inverse * v));
    if (store) {
      fp.predicted_mean.push_back(a);
      fp.predicted_cov.push_back(P);
      fp.innovation.push_back(v);
      fp.innovation_inv.push_back(factor.inverse);
      fp.gain.push_back(K);
      fp.filtered_mean.push_back(af);
      fp.filtered_cov.push_back(Pf);
    }
  }
  return fp;
}

}  // namespace detail

/// Covariance-form Kalman filter. The log-likelihood is the joint Gaussian
/// log density of all observations.
template <typename Scalar, typename ObsDerived>
FilterResult<Scalar> kalman_filter(const LinearGaussianSsm<Scalar>& model,
                                   const Eigen::MatrixBase<ObsDerived>& obs) {
  auto fp = detail::forward_pass(model, obs, true);
  FilterResult<Scalar> out;
  out.loglik = fp.loglik;
  const Eigen::Index T = obs.rows();
  out.filtered_means.resize(T, model.state_dim());
  for (Eigen::Index t = 0; t < T; ++t) out.filtered_means.row(t) = fp.filtered_mean[t].transpose();
  out.filtered_covs = std::move(fp.filtered_cov);
  return out;
}

/// Log-likelihood only; skips storing the filtered moments.
template <typename Scalar, typename ObsDerived>
Scalar kalman_loglik(const LinearGaussianSsm<Scalar>& model,
                     const Eigen::MatrixBase<ObsDerived>& obs) {
  return detail::forward_pass(model, obs, false).loglik;
}

/// Fixed-interval smoother using the backward (r_t, N_t) recursion, which
/// needs no inverse of the predicted state covariance.
template <typename Scalar, typename ObsDerived>
SmootherResult<Scalar> kalman_smoother(const LinearGaussianSsm<Scalar>& model,
                                       const Eigen::MatrixBase<ObsDerived>& obs) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto fp = detail::forward_pass(model, obs, true);
  const Eigen::Index T = obs.rows();
  const Eigen::Index n = model.state_dim();
  SmootherResult<Scalar> out;
  out.smoothed_means.resize(T, n);
  out.smoothed_covs.resize(static_cast<std::size_t>(T));
  Vector r = Vector::Zero(n);
  Matrix N = Matrix::Zero(n, n);
  const Matrix I = Matrix::Identity(n, n);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Matrix& P = fp.predicted_cov[t];
    const Matrix& Finv = fp.innovation_inv[t];
    // L_t = A (I - K_t C), the transition of the prediction error.
    const Matrix L = model.A * (I - fp.gain[t] * model.C);
    r = model.C.transpose() * (Finv * fp.innovation[t]) + L.transpose() * r;
    N = model.C.transpose() * Finv * model.C + L.transpose() * N * L;
    N = Scalar(0.5) * (N + N.transpose()).eval();
    out.smoothed_means.row(t) = (fp.predicted_mean[t] + P * r).transpose();
    Matrix V = P - P * N * P;
    out.smoothed_covs[t] = Scalar(0.5) * (V + V.transpose());
  }
  return out;
}

/// Symmetric square root factor L with L L' = S for a PSD matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> psd_factor(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& S) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (S.size() == 0) return S;
  if (S.rows() == 1) return Matrix::Constant(1, 1, std::sqrt(std::max(S(0, 0), Scalar(0))));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
}

/// Draws state paths from p(states | obs) by the mean-correction scheme:
/// simulate (states+, obs+) from the model, then shift by the difference of
/// the smoothed means of the real and simulated observations.
///
/// The gain sequence does not depend on the data, so it is computed once
/// and each draw costs two vector passes.
template <typename Scalar>
class SimulationSmoother {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename ObsDerived>
  SimulationSmoother(const LinearGaussianSsm<Scalar>& model,
                     const Eigen::MatrixBase<ObsDerived>& obs)
      : model_(model) {
    const auto fp = detail::forward_pass(model_, obs, true);
    const Eigen::Index T = obs.rows();
    const Eigen::Index n = model_.state_dim();
    const Matrix I = Matrix::Identity(n, n);
    gain_ = fp.gain;
    innovation_inv_ = fp.innovation_inv;
    predicted_cov_ = fp.predicted_cov;
    transfer_.reserve(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      transfer_.push_back((model_.A * (I - gain_[t] * model_.C)).transpose());
    }
    smoothed_data_mean_ = smoothed_mean(obs.derived());
    p1_factor_ = psd_factor<Scalar>(model_.P1);
    for (Eigen::Index t = 0; t < T; ++t) {
      shock_factor_.push_back(psd_factor<Scalar>(model_.shock_cov(t)));
      noise_factor_.push_back(psd_factor<Scalar>(model_.noise_cov(t)));
    }
  }

  /// Smoothed mean E[states | obs] for the model's covariance sequence.
  Matrix smoothed_mean(const Matrix& obs) const {
    const Eigen::Index T = obs.rows();
    const Eigen::Index n = model_.state_dim();
    std::vector<Vector> a(static_cast<std::size_t>(T));
    std::vector<Vector> v(static_cast<std::size_t>(T));
    Vector at = model_.a1;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (t > 0) at = model_.A * (a[t - 1] + gain_[t - 1] * v[t - 1]);
      a[t] = at;
      v[t] = obs.row(t).transpose() - model_.C * at - model_.intercept(t);
    }
    Matrix out(T, n);
    Vector r = Vector::Zero(n);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      r = model_.C.transpose() * (innovation_inv_[t] * v[t]) + transfer_[t] * r;
      out.row(t) = (a[t] + predicted_cov_[t] * r).transpose();
    }
    return out;
  }

  const Matrix& data_smoothed_mean() const { return smoothed_data_mean_; }

  Matrix draw(RngStream& rng) const {
    const Eigen::Index T = smoothed_data_mean_.rows();
    const Eigen::Index n = model_.state_dim();
    const Eigen::Index p = model_.obs_dim();
    const Eigen::Index m = model_.shock_dim();
    Matrix states(T, n);
    Matrix obs(T, p);
    Vector s(n);
    for (Eigen::Index t = 0; t < T; ++t) {
      if (t == 0) {
        s = model_.a1 + p1_factor_ * standard_normal(n, rng);
      } else {
        s = model_.A * s + model_.B * (shock_factor_[t] * standard_normal(m, rng));
      }
      states.row(t) = s.transpose();
      obs.row(t) = (model_.C * s + model_.intercept(t) +
                    noise_factor_[t] * standard_normal(p, rng))
                       .transpose();
    }
    return states + smoothed_data_mean_ - smoothed_mean(obs);
  }

 private:
  static Vector standard_normal(Eigen::Index k, RngStream& rng) {
    Vector z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
    return z;
  }

  LinearGaussianSsm<Scalar> model_;
  std::vector<Matrix> gain_;
  std::vector<Matrix> innovation_inv_;
  std::vector<Matrix> predicted_cov_;
  std::vector<Matrix> transfer_;
  std::vector<Matrix> shock_factor_;
  std::vector<Matrix> noise_factor_;
  Matrix p1_factor_;
  Matrix smoothed_data_mean_;
};

/// One exact draw of the state path given the observations.
template <typename Scalar, typename ObsDerived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> simulation_smoother(
    const LinearGaussianSsm<Scalar>& model, const Eigen::MatrixBase<ObsDerived>& obs,
    RngStream& rng) {
  return SimulationSmoother<Scalar>(model, obs).draw(rng);
}

}  // namespace amortss::ssm
