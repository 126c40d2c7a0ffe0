#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "amortss/core/errors.hpp"

namespace amortss::ssm {

/// Largest eigenvalue modulus of a square matrix.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.size() == 0) return Scalar(0);
  Eigen::EigenSolver<Matrix> es(Matrix(A), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Solves P = A P A' + Q for stable A.
///
/// Small systems go through the vectorised form (I - A (x) A) vec P = vec Q
/// with one step of iterative refinement; larger ones use the doubling
/// iteration. Throws UnstableSystemError when the spectral radius of A is
/// at or within 1e-9 of one.
template <typename DerivedA, typename DerivedQ>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_discrete_lyapunov(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedQ>& Q) {
  using Scalar = typename DerivedA::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw DimensionMismatchError("solve_discrete_lyapunov: A and Q must be square and equal size");
  }
  const Scalar radius = spectral_radius(A);
  if (!(radius < Scalar(1) - Scalar(1e-9))) throw UnstableSystemError(radius);

  const Matrix Qs = Scalar(0.5) * (Q + Q.transpose());
  Matrix P;
  if (n <= 12) {
    const Eigen::Index nn = n * n;
    Matrix K = Matrix::Identity(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n; ++l)
          for (Eigen::Index k = 0; k < n; ++k) K(i + n * j, k + n * l) -= A(i, k) * A(j, l);
    Eigen::PartialPivLU<Matrix> lu(K);
    const Vector q = Eigen::Map<const Vector>(Qs.data(), nn);
    Vector x = lu.solve(q);
    x += lu.solve(q - K * x);
    P = Eigen::Map<const Matrix>(x.data(), n, n);
  } else {
    // Doubling: P = sum_k A^k Q A'^k, summed in blocks of 2^j terms.
    Matrix Ak = A;
    P = Qs;
    for (int iter = 0; iter < 100; ++iter) {
      const Matrix increment = Ak * P * Ak.transpose();
      P += increment;
      Ak = (Ak * Ak).eval();
      if (increment.norm() <= Scalar(1e-16) * P.norm()) break;
    }
  }
  return Scalar(0.5) * (P + P.transpose());
}

}  // namespace amortss::ssm
