#include "amortss/core/types.hpp"

#include <stdexcept>

namespace amortss {

TimeSeries::TimeSeries(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("TimeSeries: need at least one row and one column");
  }
  if (!values_.allFinite()) throw std::invalid_argument("TimeSeries: non-finite value");
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("y" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw std::invalid_argument("TimeSeries: one name per column required");
  }
}

}  // namespace amortss
