#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace amortss {

/// Observed series, one row per time step and one column per observable.
class TimeSeries {
 public:
  TimeSeries() = default;
  /// Throws std::invalid_argument for empty or non-finite input.
  explicit TimeSeries(Eigen::MatrixXd values, std::vector<std::string> names = {});

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index length() const { return values_.rows(); }
  Eigen::Index dim() const { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

/// Equal-length simulated series with their hidden-state targets.
/// Every member of `obs` and `states` is T x D.
struct TimeSeriesBatch {
  std::vector<Eigen::MatrixXd> obs;
  std::vector<Eigen::MatrixXd> states;
  /// Auxiliary targets (empty when the model has none).
  std::vector<Eigen::MatrixXd> aux;

  Eigen::Index size() const { return static_cast<Eigen::Index>(obs.size()); }
  Eigen::Index length() const { return obs.empty() ? 0 : obs.front().rows(); }
};

/// Per-time, per-state Gaussian marginals. Both matrices are T x K.
struct MarginalGaussianPosterior {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std;
};

}  // namespace amortss
