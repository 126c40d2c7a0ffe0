#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/core/types.hpp"
#include "amortss/sim/dsge.hpp"
#include "amortss/sim/sv.hpp"

namespace amortss::mcmc {

struct McmcOptions {
  int n_iter = 2000;
  /// Keep every `thin`-th post burn-in state draw; 0 keeps none.
  int thin = 10;
  /// Leading fraction of iterations excluded from state summaries.
  double burn_in_fraction = 0.5;
  double scale = 1.5;   // c in the proposal covariance c^2 / k * Sigma_n
  double sigma0 = 0.1;  // initial proposal covariance sigma0 * I
  double log_offset = sim::kLogOffset;
};

/// Per-block Metropolis statistics.
struct BlockStats {
  std::string name;
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  /// Proposals with zero posterior mass (e.g. no unique stable RE solution).
  std::int64_t rejected_support = 0;
  Eigen::MatrixXd proposal_cov;

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

struct McmcChain {
  std::vector<std::string> param_names;
  /// One row per iteration, parameters in the coordinates named above.
  Eigen::MatrixXd params;
  std::vector<std::string> state_names;
  /// Thinned post burn-in state draws, each T x K.
  std::vector<Eigen::MatrixXd> state_draws;
  std::vector<int> state_draw_iter;
  /// Mean and std over every post burn-in iteration, T x K.
  Eigen::MatrixXd state_mean;
  Eigen::MatrixXd state_std;
  std::vector<BlockStats> blocks;
  std::int64_t burn_in = 0;

  MarginalGaussianPosterior posterior() const { return {state_mean, state_std}; }
};

/// Mixture sampler for the SV model on the transformed series
/// log(c + |y_t|) (which stays finite when y_t itself overflows).
McmcChain mcmc_sv_log_abs(const Eigen::VectorXd& log_abs_y, const McmcOptions& opts,
                          RngStream& rng);
/// Same sampler on the raw univariate series.
McmcChain mcmc_sv(const TimeSeries& y, const McmcOptions& opts, RngStream& rng);

struct DsgeMcmcOptions : McmcOptions {
  DsgeMcmcOptions() { n_iter = 5000; }
  /// Starting values; prior means when unset.
  std::optional<ssm::DsgeStructuralParams> theta0;
  std::optional<sim::SvProcessParams> sv0;
  /// Hold the structural parameters fixed at their starting value.
  bool fix_structural = false;
};

/// Gibbs-within-Metropolis sampler for the SV-DSGE model on T x 3
/// observations (output growth, inflation, interest rate).
McmcChain mcmc_dsge(const TimeSeries& obs, const DsgeMcmcOptions& opts, RngStream& rng);

/// Prior means of the prior variables, mapped back to parameters.
ssm::DsgeStructuralParams dsge_prior_mean_structural();
sim::SvProcessParams dsge_prior_mean_sv();

}  // namespace amortss::mcmc
