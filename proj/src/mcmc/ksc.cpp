#include "amortss/mcmc/ksc.hpp"

#include <cmath>

namespace amortss::mcmc {

const KscMixture& ksc_mixture() {
  static const KscMixture mix = [] {
    KscMixture m{{0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750},
                 {-10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819},
                 {5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261}};
    for (double& x : m.mean) x -= 1.2704;
    return m;
  }();
  return mix;
}

std::array<double, 7> ksc_posterior(double obs, double sv, double loading, const KscMixture& mix) {
  std::array<double, 7> lw{};
  double top = -INFINITY;
  for (int k = 0; k < 7; ++k) {
    if (mix.weight[k] <= 0.0) {
      lw[k] = -INFINITY;
      continue;
    }
    const double r = obs - loading * sv - mix.mean[k];
    lw[k] = std::log(mix.weight[k]) - 0.5 * std::log(mix.var[k]) - 0.5 * r * r / mix.var[k];
    top = std::max(top, lw[k]);
  }
  double total = 0.0;
  for (double& x : lw) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : lw) x /= total;
  return lw;
}

std::vector<int> ksc_sample_indicators(const Eigen::VectorXd& sv, const Eigen::VectorXd& obs,
                                       double loading, RngStream& rng, const KscMixture& mix) {
  std::vector<int> z(static_cast<std::size_t>(obs.size()));
  for (Eigen::Index t = 0; t < obs.size(); ++t) {
    const auto p = ksc_posterior(obs[t], sv[t], loading, mix);
    double u = rng.uniform();
    int k = 0;
    for (; k < 6; ++k) {
      u -= p[k];
      if (u <= 0.0) break;
    }
    while (p[k] == 0.0 && k > 0) --k;  // never land on a zero-probability tail
    z[static_cast<std::size_t>(t)] = k;
  }
  return z;
}

}  // namespace amortss::mcmc
