#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace amortss::nn {

/// Activations are stored time-major: row t * B + b holds batch member b at
/// time t, so the rows of one time step form a contiguous block.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Location of one tensor inside the flat parameter vector (column-major).
struct Slot {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

struct TensorInfo {
  std::string name;
  Slot slot;
  /// Glorot bound sqrt(6 / (fan_in + fan_out)); 0 for tensors initialized to zero.
  double init_bound = 0.0;
};

/// Hands out slots in a flat parameter vector in registration order.
class ParamRegistry {
 public:
  Slot add(std::string name, Eigen::Index rows, Eigen::Index cols, double init_bound);
  Eigen::Index total() const { return total_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

 private:
  std::vector<TensorInfo> tensors_;
  Eigen::Index total_ = 0;
};

inline Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& flat, const Slot& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}
inline Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& flat, const Slot& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}

/// Linear convolutions over time with several window lengths, zero padded
/// at both ends, concatenated after the raw input. A window of length w
/// covers offsets -floor(w/2) .. w - 1 - floor(w/2) around t.
class ConvFeatures {
 public:
  ConvFeatures() = default;
  ConvFeatures(ParamRegistry& reg, Eigen::Index input_dim, std::vector<int> windows,
               Eigen::Index channels);

  Eigen::Index output_dim() const;

  struct Cache {
    std::vector<RowMat> columns;  // one im2col matrix per window
  };

  void forward(const Eigen::VectorXd& params, const RowMat& x, Eigen::Index T, Eigen::Index B,
               RowMat& out, Cache* cache) const;
  /// Accumulates kernel and bias gradients. The input is data, so no input
  /// gradient is produced.
  void backward(const Eigen::VectorXd& params, const Cache& cache, const RowMat& dout,
                Eigen::VectorXd& grad) const;

  const std::vector<int>& windows() const { return windows_; }

 private:
  Eigen::Index input_dim_ = 0;
  Eigen::Index channels_ = 0;
  std::vector<int> windows_;
  std::vector<Slot> kernels_;
  std::vector<Slot> biases_;
};

/// Gated recurrent unit running over the sequence in one direction:
///   r = sigmoid(x Wx_r + bx_r + h Uh_r + bh_r)
///   z = sigmoid(x Wx_z + bx_z + h Uh_z + bh_z)
///   n = tanh(x Wx_n + bx_n + r * (h Uh_n + bh_n))
///   h' = (1 - z) * n + z * h
/// with h = 0 before the first processed step.
class GruDirection {
 public:
  GruDirection() = default;
  GruDirection(ParamRegistry& reg, const std::string& prefix, Eigen::Index input_dim,
               Eigen::Index hidden, bool reverse);

  struct Cache {
    RowMat r, z, n, hn;  // N x H each; hn = h Uh_n + bh_n
  };

  /// Writes hidden states into columns [col, col + H) of `out`.
  void forward(const Eigen::VectorXd& params, const RowMat& x, Eigen::Index T, Eigen::Index B,
               RowMat& out, Eigen::Index col, Cache* cache) const;
  /// `dout` columns [col, col + H) hold dL/dh. Accumulates parameter
  /// gradients and adds dL/dx into `dx`.
  void backward(const Eigen::VectorXd& params, const RowMat& x, const RowMat& out,
                Eigen::Index col, const Cache& cache, const RowMat& dout, Eigen::Index T,
                Eigen::Index B, Eigen::VectorXd& grad, RowMat& dx) const;

  Eigen::Index hidden() const { return hidden_; }

 private:
  Eigen::Index input_dim_ = 0;
  Eigen::Index hidden_ = 0;
  bool reverse_ = false;
  Slot Wx_, Uh_, bx_, bh_;
};

/// Stack of bidirectional GRU layers; output is [N x 2H] with the forward
/// direction in the first H columns.
class BiGru {
 public:
  BiGru() = default;
  BiGru(ParamRegistry& reg, Eigen::Index input_dim, Eigen::Index hidden, int layers);

  struct Cache {
    std::vector<RowMat> outputs;  // per layer
    std::vector<GruDirection::Cache> fwd, bwd;
  };

  void forward(const Eigen::VectorXd& params, const RowMat& x, Eigen::Index T, Eigen::Index B,
               RowMat& out, Cache* cache) const;
  void backward(const Eigen::VectorXd& params, const RowMat& x, const Cache& cache,
                const RowMat& dout, Eigen::Index T, Eigen::Index B, Eigen::VectorXd& grad,
                RowMat& dx) const;

  Eigen::Index output_dim() const { return 2 * hidden_; }

 private:
  Eigen::Index hidden_ = 0;
  std::vector<GruDirection> fwd_, bwd_;
};

/// Per-time MLP: out = tanh(h W1 + b1) W2 + b2.
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(ParamRegistry& reg, Eigen::Index input_dim, Eigen::Index hidden,
          Eigen::Index output_dim);

  struct Cache {
    RowMat hidden;
  };

  void forward(const Eigen::VectorXd& params, const RowMat& h, RowMat& out, Cache* cache) const;
  void backward(const Eigen::VectorXd& params, const RowMat& h, const Cache& cache,
                const RowMat& dout, Eigen::VectorXd& grad, RowMat& dh) const;

 private:
  Slot W1_, b1_, W2_, b2_;
};

/// Element-wise helpers shared by layers and tests.
void sigmoid_inplace(Eigen::Ref<RowMat> x);
void tanh_inplace(Eigen::Ref<RowMat> x);

/// Sum over all elements of -log N(target; mean, std), plus the partial
/// derivatives with respect to mean and std when requested.
double gaussian_nll_sum(const RowMat& mean, const RowMat& std, const RowMat& target,
                        RowMat* dmean, RowMat* dstd);

}  // namespace amortss::nn
