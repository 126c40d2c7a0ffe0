#pragma once

#include <Eigen/Dense>
#include <vector>

#include "amortss/core/errors.hpp"

namespace amortss::ssm {

/// Linear Gaussian state space model
///
///   s_1 ~ N(a1, P1)
///   s_t = A s_{t-1} + B eta_t,      eta_t ~ N(0, Q_t),   t >= 2
///   y_t = C s_t + d_t + eps_t,      eps_t ~ N(0, H_t)
///
/// Q, d and H may be given per period through the *_path members; an empty
/// path means the constant member applies at every t. Entry 0 of q_path is
/// never used (there is no transition into the first period).
template <typename Scalar_>
struct LinearGaussianSsm {
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix C;
  Vector d;
  Matrix H;
  Matrix P1;
  Vector a1;

  std::vector<Matrix> q_path;
  std::vector<Vector> d_path;
  std::vector<Matrix> h_path;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index obs_dim() const { return C.rows(); }
  Eigen::Index shock_dim() const { return B.cols(); }

  const Matrix& shock_cov(Eigen::Index t) const {
    return q_path.empty() ? Q : q_path[static_cast<std::size_t>(t)];
  }
  const Vector& intercept(Eigen::Index t) const {
    return d_path.empty() ? d : d_path[static_cast<std::size_t>(t)];
  }
  const Matrix& noise_cov(Eigen::Index t) const {
    return h_path.empty() ? H : h_path[static_cast<std::size_t>(t)];
  }

  /// Throws DimensionMismatchError when the matrices do not fit together or
  /// a time-varying path is shorter than `T`.
  void validate(Eigen::Index T) const {
    const Eigen::Index n = state_dim();
    const Eigen::Index p = obs_dim();
    const Eigen::Index m = shock_dim();
    auto require = [](bool ok, const char* what) {
      if (!ok) throw DimensionMismatchError(std::string("LinearGaussianSsm: ") + what);
    };
    require(A.cols() == n, "A must be square");
    require(B.rows() == n, "B rows");
    require(C.cols() == n, "C cols");
    require(a1.size() == n, "a1 size");
    require(P1.rows() == n && P1.cols() == n, "P1 shape");
    if (q_path.empty()) {
      require(Q.rows() == m && Q.cols() == m, "Q shape");
    } else {
      require(static_cast<Eigen::Index>(q_path.size()) >= T, "q_path too short");
    }
    if (d_path.empty()) {
      require(d.size() == p, "d size");
    } else {
      require(static_cast<Eigen::Index>(d_path.size()) >= T, "d_path too short");
    }
    if (h_path.empty()) {
      require(H.rows() == p && H.cols() == p, "H shape");
    } else {
      require(static_cast<Eigen::Index>(h_path.size()) >= T, "h_path too short");
    }
  }
};

using LinearGaussianSsmd = LinearGaussianSsm<double>;

}  // namespace amortss::ssm
