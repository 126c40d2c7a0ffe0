#pragma once

#include <Eigen/Dense>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/core/types.hpp"
#include "amortss/nn/config.hpp"
#include "amortss/nn/layers.hpp"

namespace amortss::nn {

/// Conv features -> stacked bidirectional GRU -> per-time MLP head that
/// emits Gaussian marginals for K states plus A auxiliary targets. With
/// feature_skip the conv features also feed the mean outputs linearly.
///
/// Parameters live outside the network in one flat vector so optimizers,
/// checkpoints and gradient checks can treat them uniformly.
class Network {
 public:
  explicit Network(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  Eigen::Index num_params() const { return registry_.total(); }
  const std::vector<TensorInfo>& tensors() const { return registry_.tensors(); }

  /// Glorot-uniform weights, zero biases.
  Eigen::VectorXd init_params(RngStream& rng) const;

  /// All outputs are N x K (or N x A) in target units, time-major rows.
  struct Output {
    RowMat mean, std, aux_mean, aux_std;
  };

  struct Workspace {
    RowMat xn, conv, rnn, head_out;
    ConvFeatures::Cache conv_cache;
    BiGru::Cache rnn_cache;
    MlpHead::Cache head_cache;
  };

  /// `x` holds raw inputs [T*B x input_dim], time-major.
  void forward(const Eigen::VectorXd& params, const RowMat& x, Eigen::Index T, Eigen::Index B,
               Output& out, Workspace* ws = nullptr) const;

  /// Mean negative log-likelihood
  ///   (sum over state NLL + aux_weight * sum over aux NLL) / (T * B * K)
  /// and, when `grad` is non-null, its gradient (overwritten).
  double loss(const Eigen::VectorXd& params, const RowMat& x, const RowMat& target,
              const RowMat& aux_target, Eigen::Index T, Eigen::Index B, double aux_weight,
              Eigen::VectorXd* grad) const;

  /// Single series [T x input_dim] -> marginals over the K states.
  MarginalGaussianPosterior predict(const Eigen::VectorXd& params,
                                    const Eigen::MatrixXd& series) const;

 private:
  NetworkConfig cfg_;
  ParamRegistry registry_;
  ConvFeatures conv_;
  BiGru rnn_;
  MlpHead head_;
  Slot skip_;  // conv_dim x (K + A), empty without feature_skip
};

/// Stacks B equal-length T x D matrices into a time-major [T*B x D] matrix.
RowMat pack_time_major(const std::vector<Eigen::MatrixXd>& series);
/// Inverse of pack_time_major for member b.
Eigen::MatrixXd unpack_member(const RowMat& packed, Eigen::Index T, Eigen::Index B,
                              Eigen::Index b);

}  // namespace amortss::nn
