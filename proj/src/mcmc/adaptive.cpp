#include "amortss/mcmc/adaptive.hpp"

#include <cmath>
#include <stdexcept>

namespace amortss::mcmc {

AdaptiveProposal::AdaptiveProposal(int dim, double divisor, double c, double sigma0)
    : dim_(dim), divisor_(divisor), c_(c) {
  if (dim < 1 || divisor <= 0) throw std::invalid_argument("AdaptiveProposal: bad dimension or divisor");
  sigma0_ = sigma0 * Eigen::MatrixXd::Identity(dim, dim);
  mean_ = Eigen::VectorXd::Zero(dim);
  m2_ = Eigen::MatrixXd::Zero(dim, dim);
  refresh_factor();
}

Eigen::MatrixXd AdaptiveProposal::covariance() const {
  if (n_ < dim_ + 2) return sigma0_;
  Eigen::MatrixXd s = m2_ / static_cast<double>(n_ - 1);
  s = 0.5 * (s + s.transpose()).eval();
  s.diagonal().array() += 1e-10;
  return s;
}

void AdaptiveProposal::refresh_factor() {
  const Eigen::MatrixXd s = (c_ * c_ / divisor_) * covariance();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
}

void AdaptiveProposal::record(const Eigen::VectorXd& x) {
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_).transpose();
  if (n_ >= dim_ + 2) refresh_factor();
}

Eigen::VectorXd AdaptiveProposal::propose(const Eigen::VectorXd& current, RngStream& rng) const {
  Eigen::VectorXd z(dim_);
  for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
  if (rng.uniform() < main_weight) return current + factor_ * z;
  return current + (fixed_std / std::sqrt(divisor_)) * z;
}

RwmhStep rwmh_adaptive_step(const Eigen::VectorXd& current, double current_log_target,
                            const std::function<double(const Eigen::VectorXd&)>& log_target,
                            AdaptiveProposal& proposal, RngStream& rng) {
  const Eigen::VectorXd cand = proposal.propose(current, rng);
  const double lt = log_target(cand);
  const double log_u = std::log(rng.uniform());
  RwmhStep out{current, current_log_target, false};
  if (std::isfinite(lt) && log_u < lt - current_log_target) out = {cand, lt, true};
  proposal.record(out.theta);
  return out;
}

}  // namespace amortss::mcmc
