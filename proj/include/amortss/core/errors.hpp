#pragma once

#include <stdexcept>
#include <string>

namespace amortss {

/// Base class for failures caused by the numbers rather than the caller
/// (singular matrices, unstable systems). The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVarianceError : public NumericalError {
 public:
  ZeroVarianceError() : NumericalError("standardize: input has zero variance") {}
};

class SingularInnovationError : public NumericalError {
 public:
  explicit SingularInnovationError(int t)
      : NumericalError("kalman: singular innovation covariance at t=" + std::to_string(t)),
        time_index(t) {}
  int time_index;
};

class UnstableSystemError : public NumericalError {
 public:
  explicit UnstableSystemError(double spectral_radius)
      : NumericalError("lyapunov: transition matrix is not stable (spectral radius " +
                       std::to_string(spectral_radius) + ")"),
        radius(spectral_radius) {}
  double radius;
};

class NonPositiveStdError : public NumericalError {
 public:
  NonPositiveStdError() : NumericalError("gaussian_nll: non-positive standard deviation") {}
};

/// Caller errors: wrong shapes, unknown identifiers, empty requests.
class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownModelError : public std::invalid_argument {
 public:
  explicit UnknownModelError(const std::string& name)
      : std::invalid_argument("unknown model id '" + name + "'") {}
};

class EmptyBenchmarkError : public std::invalid_argument {
 public:
  EmptyBenchmarkError() : std::invalid_argument("benchmark requested with zero runs") {}
};

}  // namespace amortss
