#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "amortss/core/errors.hpp"

namespace amortss {

/// log(1 + e^x) without overflow for large |x|.
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  if (x > Scalar(30)) return x + log1p(exp(-x));
  return log1p(exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// Element-wise log(c + |y|).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_abs_transform(
    const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar c) {
  return (y.array().abs() + c).log().matrix();
}

template <typename Scalar>
struct Standardized {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Scalar mean;
  Scalar std;
};

/// Population moments (divide by N).
template <typename Derived>
typename Derived::Scalar population_std(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / Scalar(x.size()));
}

/// Shift to mean zero and scale to unit population std.
/// Throws ZeroVarianceError for constant input.
template <typename Derived>
Standardized<typename Derived::Scalar> standardize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() < 2) throw DimensionMismatchError("standardize: need at least two values");
  const Scalar m = x.mean();
  const Scalar s = population_std(x);
  if (!(s > Scalar(0))) throw ZeroVarianceError();
  return {((x.array() - m) / s).matrix(), m, s};
}

}  // namespace amortss
