#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/nn/network.hpp"

namespace gradcheck {

struct Result {
  double max_rel = 0.0;
  Eigen::Index worst = -1;
  int checked = 0;
};

enum class Stencil { ThreePoint, FivePoint };

/// Central differences on the listed coordinates. Relative error is
/// |fd - an| / max(|fd|, |an|, floor). The five-point stencil has O(h^4)
/// truncation error, so it tolerates a larger h and less roundoff.
template <typename F>
Result compare(F&& f, Eigen::VectorXd x, const Eigen::VectorXd& analytic,
               const std::vector<Eigen::Index>& coords, double h, double floor = 1e-7,
               Stencil stencil = Stencil::ThreePoint) {
  Result r;
  const auto at = [&](Eigen::Index i, double v) {
    const double saved = x[i];
    x[i] = v;
    const double out = f(x);
    x[i] = saved;
    return out;
  };
  for (Eigen::Index i : coords) {
    const double x0 = x[i];
    double fd;
    if (stencil == Stencil::ThreePoint) {
      fd = (at(i, x0 + h) - at(i, x0 - h)) / (2.0 * h);
    } else {
      fd = (8.0 * (at(i, x0 + h) - at(i, x0 - h)) - (at(i, x0 + 2 * h) - at(i, x0 - 2 * h))) /
           (12.0 * h);
    }
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), floor});
    const double rel = std::abs(fd - analytic[i]) / denom;
    if (rel > r.max_rel) {
      r.max_rel = rel;
      r.worst = i;
    }
    ++r.checked;
  }
  return r;
}

inline std::vector<Eigen::Index> all_coords(Eigen::Index n) {
  std::vector<Eigen::Index> c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = i;
  return c;
}

inline std::vector<Eigen::Index> random_coords(Eigen::Index n, int k, amortss::RngStream& rng) {
  std::vector<Eigen::Index> c;
  while (static_cast<int>(c.size()) < k) {
    const Eigen::Index i = rng.uniform_int(0, static_cast<int>(n) - 1);
    if (std::find(c.begin(), c.end(), i) == c.end()) c.push_back(i);
  }
  return c;
}

inline amortss::nn::RowMat random_rowmat(Eigen::Index r, Eigen::Index c, amortss::RngStream& rng,
                                         double scale = 1.0) {
  amortss::nn::RowMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// The three architectures used by the models, shrunk so a check runs in
/// well under a second.
inline amortss::nn::NetworkConfig small_config(const std::string& model) {
  amortss::nn::NetworkConfig c;
  c.conv_windows = {2, 3, 5};
  c.conv_channels = 3;
  c.rnn_hidden = 5;
  c.head_hidden = 6;
  if (model == "dsge") {
    c.input_dim = 3;
    c.n_state_outputs = 3;
    c.aux_outputs = 3;
    c.rnn_layers = 2;
    c.input_offset = {0.4, 0.6, 1.0};
    c.input_scale = {0.5, 0.3, 0.4};
    c.target_offset = {-0.1, 0.2, 0.0};
    c.target_scale = {0.8, 1.5, 1.1};
    c.aux_offset = {-1.0, -1.0, -1.0};
    c.aux_scale = {1.3, 1.3, 1.3};
  } else if (model == "sv") {
    c.input_offset = {-1.3};
    c.input_scale = {1.2};
    c.target_offset = {0.3};
    c.target_scale = {2.0};
  }
  return c;
}

/// Full-stack check of the mean NLL on a random batch, at `n_coords`
/// randomly chosen parameters.
inline Result network_check(const std::string& model, amortss::RngStream& rng, int n_coords,
                            double h = 1e-5) {
  using namespace amortss::nn;
  const Network net(small_config(model));
  const auto& cfg = net.config();
  const Eigen::Index T = 6, B = 3;
  auto init = rng.derive("init");
  // Offsets make biases and zero-initialized tensors (the feature skip)
  // non-zero so every backward path carries signal.
  Eigen::VectorXd p = net.init_params(init);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += 0.1 * rng.normal();
  const RowMat x = random_rowmat(T * B, cfg.input_dim, rng);
  const RowMat y = random_rowmat(T * B, cfg.n_state_outputs, rng);
  const RowMat a = random_rowmat(T * B, cfg.aux_outputs, rng);
  Eigen::VectorXd g;
  net.loss(p, x, y, a, T, B, 1.0, &g);
  const auto f = [&](const Eigen::VectorXd& q) { return net.loss(q, x, y, a, T, B, 1.0, nullptr); };
  return compare(f, p, g, random_coords(net.num_params(), n_coords, rng), h);
}

}  // namespace gradcheck
