#include "amortss/ssm/re_solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>

#include "amortss/core/errors.hpp"

namespace amortss::ssm {

namespace {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Matrix2cd;
using Eigen::Vector2cd;

constexpr double kUnitRootBand = 1e-8;

// Splits the 2x2 diagonal block at (i, i) of the real quasi-triangular S
// (T is triangular there) into complex triangular form.
void split_block(MatrixXcd& S, MatrixXcd& T, MatrixXcd& qH, MatrixXcd& Z, Eigen::Index i) {
  const Matrix2cd s = S.block(i, i, 2, 2);
  const Matrix2cd t = T.block(i, i, 2, 2);
  // det(t - lambda s) = a lambda^2 + b lambda + c
  const cd a = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  const cd b = -(t(0, 0) * s(1, 1) + t(1, 1) * s(0, 0) - t(0, 1) * s(1, 0) - t(1, 0) * s(0, 1));
  const cd c = t(0, 0) * t(1, 1) - t(0, 1) * t(1, 0);
  if (std::abs(a) == 0.0) return;
  const cd disc = std::sqrt(b * b - 4.0 * a * c);
  const cd lambda = (-b + disc) / (2.0 * a);

  const Matrix2cd M = t - lambda * s;
  Vector2cd v;
  if (M.row(0).norm() >= M.row(1).norm()) {
    v << -M(0, 1), M(0, 0);
  } else {
    v << -M(1, 1), M(1, 0);
  }
  if (v.norm() == 0.0) return;
  v.normalize();
  Matrix2cd zr;
  zr << v(0), -std::conj(v(1)), v(1), std::conj(v(0));

  Vector2cd w = s * v;
  if (w.norm() < 1e-300) w = t * v;
  if (w.norm() == 0.0) return;
  w.normalize();
  Matrix2cd ql;
  ql << w(0), -std::conj(w(1)), w(1), std::conj(w(0));

  const Matrix2cd qlH = ql.adjoint();
  S.middleRows(i, 2) = (qlH * S.middleRows(i, 2)).eval();
  T.middleRows(i, 2) = (qlH * T.middleRows(i, 2)).eval();
  qH.middleRows(i, 2) = (qlH * qH.middleRows(i, 2)).eval();
  S.middleCols(i, 2) = (S.middleCols(i, 2) * zr).eval();
  T.middleCols(i, 2) = (T.middleCols(i, 2) * zr).eval();
  Z.middleCols(i, 2) = (Z.middleCols(i, 2) * zr).eval();
  S(i + 1, i) = 0.0;
  T(i + 1, i) = 0.0;
}

// Exchanges the adjacent diagonal entries i, i+1 of the triangular pencil
// (A, B) = (S, T) while keeping it triangular. Same construction as the
// classic gensys qzswitch routine.
void swap_adjacent(MatrixXcd& A, MatrixXcd& B, MatrixXcd& qH, MatrixXcd& Z, Eigen::Index i) {
  const double realsmall = std::sqrt(std::numeric_limits<double>::epsilon()) * 10.0;
  const cd a = A(i, i), d = B(i, i), b = A(i, i + 1), e = B(i, i + 1);
  const cd c = A(i + 1, i + 1), f = B(i + 1, i + 1);
  Matrix2cd wz;
  Matrix2cd xy;
  if (std::abs(c) < realsmall && std::abs(f) < realsmall) {
    if (std::abs(a) < realsmall) return;
    Vector2cd w(b, -a);
    w /= w.norm();
    wz << w(0), std::conj(w(1)), w(1), -std::conj(w(0));
    xy.setIdentity();
  } else if (std::abs(a) < realsmall && std::abs(d) < realsmall) {
    if (std::abs(c) < realsmall) return;
    wz.setIdentity();
    Eigen::RowVector2cd x(c, -b);
    x /= x.norm();
    xy << std::conj(x(1)), -std::conj(x(0)), x(0), x(1);
  } else {
    Eigen::RowVector2cd w(c * e - f * b, std::conj(c * d - f * a));
    Eigen::RowVector2cd x(std::conj(b * d - e * a), std::conj(c * d - f * a));
    const double n = w.norm();
    const double m = x.norm();
    if (m < std::numeric_limits<double>::epsilon() * 100.0) return;
    w /= n;
    x /= m;
    wz << w(0), w(1), -std::conj(w(1)), std::conj(w(0));
    xy << x(0), x(1), -std::conj(x(1)), std::conj(x(0));
  }
  A.middleRows(i, 2) = (xy * A.middleRows(i, 2)).eval();
  B.middleRows(i, 2) = (xy * B.middleRows(i, 2)).eval();
  qH.middleRows(i, 2) = (xy * qH.middleRows(i, 2)).eval();
  A.middleCols(i, 2) = (A.middleCols(i, 2) * wz).eval();
  B.middleCols(i, 2) = (B.middleCols(i, 2) * wz).eval();
  Z.middleCols(i, 2) = (Z.middleCols(i, 2) * wz).eval();
  A(i + 1, i) = 0.0;
  B(i + 1, i) = 0.0;
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double root_modulus(const MatrixXcd& S, const MatrixXcd& T, Eigen::Index i) {
  const double s = std::abs(S(i, i));
  const double t = std::abs(T(i, i));
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return t / s;
}

}  // namespace

const char* to_string(ReStatus status) {
  switch (status) {
    case ReStatus::Solved: return "solved";
    case ReStatus::Indeterminate: return "indeterminate";
    case ReStatus::NoStableSolution: return "no_stable_solution";
  }
  return "unknown";
}

namespace detail {

OrderedQz ordered_qz(const MatrixXd& lead, const MatrixXd& lag) {
  const Eigen::Index n = lead.rows();
  OrderedQz out;
  Eigen::RealQZ<MatrixXd> qz(n);
  qz.compute(lead, lag, true);
  if (qz.info() != Eigen::Success) return out;
  // RealQZ: lead = Q S Z, lag = Q T Z with S quasi-triangular.
  out.S = qz.matrixS().cast<cd>();
  out.T = qz.matrixT().cast<cd>();
  MatrixXcd qH = qz.matrixQ().transpose().cast<cd>();
  out.Z = qz.matrixZ().transpose().cast<cd>();

  const double scale = std::max(1.0, qz.matrixS().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i + 1 < n;) {
    if (std::abs(out.S(i + 1, i)) > 1e-14 * scale) {
      split_block(out.S, out.T, qH, out.Z, i);
      i += 2;
    } else {
      out.S(i + 1, i) = 0.0;
      ++i;
    }
  }

  // Bubble unstable roots towards the bottom right.
  for (Eigen::Index pass = 0; pass < n * n; ++pass) {
    bool swapped = false;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const bool upper_unstable = root_modulus(out.S, out.T, i) > 1.0;
      const bool lower_unstable = root_modulus(out.S, out.T, i + 1) > 1.0;
      if (upper_unstable && !lower_unstable) {
        swap_adjacent(out.S, out.T, qH, out.Z, i);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
  out.Q = qH.adjoint();
  out.converged = true;
  return out;
}

}  // namespace detail

ReResult solve_rational_expectations(const ReSystem& system) {
  const Eigen::Index n = system.lead.rows();
  const Eigen::Index nk = system.n_predetermined;
  if (system.lead.cols() != n || system.lag.rows() != n || system.lag.cols() != n ||
      nk < 0 || nk > n || system.shock_impact.rows() != nk) {
    throw DimensionMismatchError("solve_rational_expectations: inconsistent system dimensions");
  }
  ReResult result;
  const auto qz = detail::ordered_qz(system.lead, system.lag);
  if (!qz.converged) return result;

  result.root_moduli.resize(n);
  bool unit_root = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = root_modulus(qz.S, qz.T, i);
    result.root_moduli(i) = r;
    if (std::abs(r - 1.0) <= kUnitRootBand) unit_root = true;
    if (r < 1.0) ++result.n_stable;
  }
  if (unit_root || result.n_stable < nk) {
    result.status = ReStatus::NoStableSolution;
    return result;
  }
  if (result.n_stable > nk) {
    result.status = ReStatus::Indeterminate;
    return result;
  }

  if (nk == 0) {
    result.solution.transition.resize(0, 0);
    result.solution.policy.resize(n, 0);
    result.solution.impact = system.shock_impact;
    result.status = ReStatus::Solved;
    return result;
  }
  const MatrixXcd Z11 = qz.Z.topLeftCorner(nk, nk);
  const MatrixXcd Z21 = qz.Z.bottomLeftCorner(n - nk, nk);
  Eigen::FullPivLU<MatrixXcd> z11_lu(Z11);
  z11_lu.setThreshold(1e-10);
  if (!z11_lu.isInvertible()) {
    result.status = ReStatus::NoStableSolution;
    return result;
  }
  const MatrixXcd Z11inv = z11_lu.inverse();
  const MatrixXcd S11 = qz.S.topLeftCorner(nk, nk);
  const MatrixXcd T11 = qz.T.topLeftCorner(nk, nk);
  const MatrixXcd dynamics =
      S11.triangularView<Eigen::Upper>().solve(T11.triangularView<Eigen::Upper>().toDenseMatrix());
  const MatrixXcd F = Z11 * dynamics * Z11inv;
  const MatrixXcd G = Z21 * Z11inv;
  const double imag = std::max(max_abs(F.imag()), max_abs(G.imag()));
  const double magnitude = 1.0 + std::max(max_abs(F.real()), max_abs(G.real()));
  if (imag > 1e-7 * magnitude) {
    result.status = ReStatus::NoStableSolution;
    return result;
  }
  result.solution.transition = F.real();
  result.solution.policy = G.real();
  result.solution.impact = system.shock_impact;
  result.status = ReStatus::Solved;
  return result;
}

}  // namespace amortss::ssm
