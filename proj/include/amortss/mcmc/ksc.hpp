#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "amortss/core/rng.hpp"

namespace amortss::mcmc {

/// Seven-component normal mixture approximating the log chi-square(1)
/// distribution (Kim, Shephard and Chib 1998, table 4). `mean` already
/// includes the -1.2704 centring term; `var` is the component variance.
struct KscMixture {
  std::array<double, 7> weight;
  std::array<double, 7> mean;
  std::array<double, 7> var;
};

const KscMixture& ksc_mixture();

/// Posterior component probabilities for one observation
///   obs = loading * sv + xi,  xi ~ sum_k w_k N(mean_k, var_k).
std::array<double, 7> ksc_posterior(double obs, double sv, double loading,
                                    const KscMixture& mix = ksc_mixture());

/// Draws z_t in 0..6 for every t from the exact discrete conditional.
std::vector<int> ksc_sample_indicators(const Eigen::VectorXd& sv, const Eigen::VectorXd& obs,
                                       double loading, RngStream& rng,
                                       const KscMixture& mix = ksc_mixture());

}  // namespace amortss::mcmc
