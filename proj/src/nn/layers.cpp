#include "amortss/nn/layers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace amortss::nn {

using Eigen::Index;

Slot ParamRegistry::add(std::string name, Index rows, Index cols, double init_bound) {
  Slot s{total_, rows, cols};
  tensors_.push_back({std::move(name), s, init_bound});
  total_ += rows * cols;
  return s;
}

namespace {

double glorot(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// colwise().sum() on a row-major matrix walks memory with a stride of one
// row per element; accumulating whole rows is several times faster.
template <typename Derived>
Eigen::RowVectorXd col_sums(const Eigen::MatrixBase<Derived>& m) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m.cols());
  for (Index i = 0; i < m.rows(); ++i) acc += m.row(i);
  return acc;
}

}  // namespace

void sigmoid_inplace(Eigen::Ref<RowMat> x) {
  x.array() = (1.0 + (-x.array()).exp()).inverse();
}

void tanh_inplace(Eigen::Ref<RowMat> x) {
  x.array() = 1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0);
}

// ---------------------------------------------------------------- conv

ConvFeatures::ConvFeatures(ParamRegistry& reg, Index input_dim, std::vector<int> windows,
                           Index channels)
    : input_dim_(input_dim), channels_(channels), windows_(std::move(windows)) {
  for (int w : windows_) {
    const std::string tag = "conv.w" + std::to_string(w);
    kernels_.push_back(reg.add(tag + ".kernel", w * input_dim, channels,
                               glorot(w * input_dim, channels)));
    biases_.push_back(reg.add(tag + ".bias", 1, channels, 0.0));
  }
}

Index ConvFeatures::output_dim() const {
  return input_dim_ + channels_ * static_cast<Index>(windows_.size());
}

void ConvFeatures::forward(const Eigen::VectorXd& params, const RowMat& x, Index T, Index B,
                           RowMat& out, Cache* cache) const {
  const Index N = T * B;
  const Index D = input_dim_;
  out.resize(N, output_dim());
  out.leftCols(D) = x;
  if (cache) cache->columns.resize(windows_.size());
  RowMat cols;
  for (std::size_t k = 0; k < windows_.size(); ++k) {
    const int w = windows_[k];
    const int lead = w / 2;
    RowMat& c = cache ? cache->columns[k] : cols;
    c.setZero(N, w * D);
    for (Index t = 0; t < T; ++t) {
      for (int j = 0; j < w; ++j) {
        const Index src = t + j - lead;
        if (src < 0 || src >= T) continue;
        c.block(t * B, j * D, B, D) = x.middleRows(src * B, B);
      }
    }
    auto block = out.middleCols(D + static_cast<Index>(k) * channels_, channels_);
    block.noalias() = c * view(params, kernels_[k]);
    block.rowwise() += view(params, biases_[k]).row(0);
  }
}

void ConvFeatures::backward(const Eigen::VectorXd&, const Cache& cache, const RowMat& dout,
                            Eigen::VectorXd& grad) const {
  for (std::size_t k = 0; k < windows_.size(); ++k) {
    const auto d = dout.middleCols(input_dim_ + static_cast<Index>(k) * channels_, channels_);
    view(grad, kernels_[k]).noalias() += cache.columns[k].transpose() * d;
    view(grad, biases_[k]).row(0) += col_sums(d);
  }
}

// ---------------------------------------------------------------- GRU

GruDirection::GruDirection(ParamRegistry& reg, const std::string& prefix, Index input_dim,
                           Index hidden, bool reverse)
    : input_dim_(input_dim), hidden_(hidden), reverse_(reverse) {
  Wx_ = reg.add(prefix + ".Wx", input_dim, 3 * hidden, glorot(input_dim, hidden));
  Uh_ = reg.add(prefix + ".Uh", hidden, 3 * hidden, glorot(hidden, hidden));
  bx_ = reg.add(prefix + ".bx", 1, 3 * hidden, 0.0);
  bh_ = reg.add(prefix + ".bh", 1, 3 * hidden, 0.0);
}

void GruDirection::forward(const Eigen::VectorXd& params, const RowMat& x, Index T, Index B,
                           RowMat& out, Index col, Cache* cache) const {
  const Index H = hidden_;
  const Index N = T * B;
  const auto Wx = view(params, Wx_);
  const auto Uh = view(params, Uh_);
  const auto bx = view(params, bx_);
  const auto bh = view(params, bh_);

  RowMat gx(N, 3 * H);
  gx.noalias() = x * Wx;
  gx.rowwise() += bx.row(0);
  if (cache) {
    cache->r.resize(N, H);
    cache->z.resize(N, H);
    cache->n.resize(N, H);
    cache->hn.resize(N, H);
  }
  RowMat h = RowMat::Zero(B, H);
  RowMat gh(B, 3 * H), r(B, H), z(B, H), n(B, H);
  for (Index s = 0; s < T; ++s) {
    const Index t = reverse_ ? T - 1 - s : s;
    const auto gxt = gx.middleRows(t * B, B);
    gh.noalias() = h * Uh;
    gh.rowwise() += bh.row(0);
    r = gxt.leftCols(H) + gh.leftCols(H);
    sigmoid_inplace(r);
    z = gxt.middleCols(H, H) + gh.middleCols(H, H);
    sigmoid_inplace(z);
    n.array() = gxt.rightCols(H).array() + r.array() * gh.rightCols(H).array();
    tanh_inplace(n);
    h.array() = (1.0 - z.array()) * n.array() + z.array() * h.array();
    out.block(t * B, col, B, H) = h;
    if (cache) {
      cache->r.middleRows(t * B, B) = r;
      cache->z.middleRows(t * B, B) = z;
      cache->n.middleRows(t * B, B) = n;
      cache->hn.middleRows(t * B, B) = gh.rightCols(H);
    }
  }
}

void GruDirection::backward(const Eigen::VectorXd& params, const RowMat& x, const RowMat& out,
                            Index col, const Cache& c, const RowMat& dout, Index T, Index B,
                            Eigen::VectorXd& grad, RowMat& dx) const {
  const Index H = hidden_;
  const Index N = T * B;
  const auto Wx = view(params, Wx_);
  const auto Uh = view(params, Uh_);

  RowMat dgx(N, 3 * H);
  RowMat dgh(N, 3 * H);
  RowMat h_prev_all = RowMat::Zero(N, H);
  RowMat dh(B, H), dh_next = RowMat::Zero(B, H);
  for (Index s = T - 1; s >= 0; --s) {
    const Index t = reverse_ ? T - 1 - s : s;
    const Index rows = t * B;
    dh = dout.block(rows, col, B, H) + dh_next;
    const auto r = c.r.middleRows(rows, B).array();
    const auto z = c.z.middleRows(rows, B).array();
    const auto n = c.n.middleRows(rows, B).array();
    const auto hn = c.hn.middleRows(rows, B).array();
    auto hp = h_prev_all.middleRows(rows, B);
    if (s > 0) {
      const Index tp = reverse_ ? t + 1 : t - 1;
      hp = out.block(tp * B, col, B, H);
    }
    const auto dn = dh.array() * (1.0 - z);
    auto dan = dgx.block(rows, 2 * H, B, H).array();
    dan = dn * (1.0 - n * n);
    dgx.block(rows, 0, B, H).array() = dan * hn * r * (1.0 - r);
    dgx.block(rows, H, B, H).array() = dh.array() * (hp.array() - n) * z * (1.0 - z);
    dgh.block(rows, 0, B, 2 * H) = dgx.block(rows, 0, B, 2 * H);
    dgh.block(rows, 2 * H, B, H).array() = dan * r;
    dh_next.array() = dh.array() * z;
    dh_next.noalias() += dgh.middleRows(rows, B) * Uh.transpose();
  }
  view(grad, Uh_).noalias() += h_prev_all.transpose() * dgh;
  view(grad, bh_).row(0) += col_sums(dgh);
  view(grad, Wx_).noalias() += x.transpose() * dgx;
  view(grad, bx_).row(0) += col_sums(dgx);
  dx.noalias() += dgx * Wx.transpose();
}

BiGru::BiGru(ParamRegistry& reg, Index input_dim, Index hidden, int layers) : hidden_(hidden) {
  for (int l = 0; l < layers; ++l) {
    const Index in = l == 0 ? input_dim : 2 * hidden;
    const std::string tag = "gru" + std::to_string(l);
    fwd_.emplace_back(reg, tag + ".fwd", in, hidden, false);
    bwd_.emplace_back(reg, tag + ".bwd", in, hidden, true);
  }
}

void BiGru::forward(const Eigen::VectorXd& params, const RowMat& x, Index T, Index B,
                    RowMat& out, Cache* cache) const {
  const std::size_t L = fwd_.size();
  if (cache) {
    cache->outputs.resize(L);
    cache->fwd.resize(L);
    cache->bwd.resize(L);
  }
  RowMat local;
  const RowMat* input = &x;
  for (std::size_t l = 0; l < L; ++l) {
    RowMat& o = cache ? cache->outputs[l] : (l + 1 == L ? out : local);
    RowMat next(T * B, 2 * hidden_);
    fwd_[l].forward(params, *input, T, B, next, 0, cache ? &cache->fwd[l] : nullptr);
    bwd_[l].forward(params, *input, T, B, next, hidden_, cache ? &cache->bwd[l] : nullptr);
    o = std::move(next);
    input = &o;
  }
  if (cache) out = cache->outputs.back();
}

void BiGru::backward(const Eigen::VectorXd& params, const RowMat& x, const Cache& cache,
                     const RowMat& dout, Index T, Index B, Eigen::VectorXd& grad,
                     RowMat& dx) const {
  const std::size_t L = fwd_.size();
  RowMat d = dout;
  for (std::size_t l = L; l-- > 0;) {
    const RowMat& in = l == 0 ? x : cache.outputs[l - 1];
    const RowMat& o = cache.outputs[l];
    RowMat din = RowMat::Zero(in.rows(), in.cols());
    fwd_[l].backward(params, in, o, 0, cache.fwd[l], d, T, B, grad, din);
    bwd_[l].backward(params, in, o, hidden_, cache.bwd[l], d, T, B, grad, din);
    d = std::move(din);
  }
  dx = std::move(d);
}

// ---------------------------------------------------------------- head

MlpHead::MlpHead(ParamRegistry& reg, Index input_dim, Index hidden, Index output_dim) {
  W1_ = reg.add("head.W1", input_dim, hidden, glorot(input_dim, hidden));
  b1_ = reg.add("head.b1", 1, hidden, 0.0);
  W2_ = reg.add("head.W2", hidden, output_dim, glorot(hidden, output_dim));
  b2_ = reg.add("head.b2", 1, output_dim, 0.0);
}

void MlpHead::forward(const Eigen::VectorXd& params, const RowMat& h, RowMat& out,
                      Cache* cache) const {
  RowMat local;
  RowMat& z = cache ? cache->hidden : local;
  z.noalias() = h * view(params, W1_);
  z.rowwise() += view(params, b1_).row(0);
  tanh_inplace(z);
  out.noalias() = z * view(params, W2_);
  out.rowwise() += view(params, b2_).row(0);
}

void MlpHead::backward(const Eigen::VectorXd& params, const RowMat& h, const Cache& cache,
                       const RowMat& dout, Eigen::VectorXd& grad, RowMat& dh) const {
  const RowMat& z = cache.hidden;
  view(grad, W2_).noalias() += z.transpose() * dout;
  view(grad, b2_).row(0) += col_sums(dout);
  RowMat dz = dout * view(params, W2_).transpose();
  dz.array() *= 1.0 - z.array().square();
  view(grad, W1_).noalias() += h.transpose() * dz;
  view(grad, b1_).row(0) += col_sums(dz);
  dh.noalias() = dz * view(params, W1_).transpose();
}

// ---------------------------------------------------------------- loss

double gaussian_nll_sum(const RowMat& mean, const RowMat& std, const RowMat& target,
                        RowMat* dmean, RowMat* dstd) {
  if (mean.rows() != target.rows() || mean.cols() != target.cols() ||
      std.rows() != target.rows() || std.cols() != target.cols()) {
    throw std::invalid_argument("gaussian_nll: shape mismatch");
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  if (dmean) dmean->resize(mean.rows(), mean.cols());
  if (dstd) dstd->resize(mean.rows(), mean.cols());
  double total = 0.0;
  for (Index i = 0; i < mean.rows(); ++i) {
    for (Index k = 0; k < mean.cols(); ++k) {
      const double s = std(i, k);
      const double inv = 1.0 / s;
      const double u = (target(i, k) - mean(i, k)) * inv;
      total += half_log_2pi + std::log(s) + 0.5 * u * u;
      if (dmean) (*dmean)(i, k) = -u * inv;
      if (dstd) (*dstd)(i, k) = (1.0 - u * u) * inv;
    }
  }
  return total;
}

}  // namespace amortss::nn
