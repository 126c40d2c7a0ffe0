#include "amortss/nn/network.hpp"

#include "amortss/core/errors.hpp"
#include "amortss/core/transforms.hpp"

namespace amortss::nn {

using Eigen::Index;

namespace {

Eigen::Map<const Eigen::RowVectorXd> row_of(const std::vector<double>& v) {
  return {v.data(), static_cast<Index>(v.size())};
}

}  // namespace

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate_and_complete();
  conv_ = ConvFeatures(registry_, cfg_.input_dim, cfg_.conv_windows, cfg_.conv_channels);
  rnn_ = BiGru(registry_, conv_.output_dim(), cfg_.rnn_hidden, cfg_.rnn_layers);
  head_ = MlpHead(registry_, rnn_.output_dim(), cfg_.head_hidden, cfg_.head_output_dim());
  // Zero start: an untrained network behaves as if the skip were absent.
  // Only mean columns: std stays bounded by the tanh head.
  if (cfg_.feature_skip) {
    skip_ = registry_.add("skip.W", conv_.output_dim(), cfg_.n_state_outputs + cfg_.aux_outputs, 0.0);
  }
}

Eigen::VectorXd Network::init_params(RngStream& rng) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(num_params());
  for (const auto& t : tensors()) {
    if (t.init_bound <= 0.0) continue;
    auto v = p.segment(t.slot.offset, t.slot.size());
    for (Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-t.init_bound, t.init_bound);
  }
  return p;
}

void Network::forward(const Eigen::VectorXd& params, const RowMat& x, Index T, Index B,
                      Output& out, Workspace* ws) const {
  if (x.rows() != T * B || x.cols() != cfg_.input_dim) {
    throw DimensionMismatchError("network: input has the wrong shape");
  }
  Workspace local;
  Workspace& w = ws ? *ws : local;
  w.xn = (x.rowwise() - row_of(cfg_.input_offset)).array().rowwise() /
         row_of(cfg_.input_scale).array();
  conv_.forward(params, w.xn, T, B, w.conv, ws ? &w.conv_cache : nullptr);
  rnn_.forward(params, w.conv, T, B, w.rnn, ws ? &w.rnn_cache : nullptr);
  head_.forward(params, w.rnn, w.head_out, &w.head_cache);

  const Index K = cfg_.n_state_outputs;
  const Index A = cfg_.aux_outputs;
  if (skip_.size() > 0) {
    const RowMat s = w.conv * view(params, skip_);
    w.head_out.leftCols(K) += s.leftCols(K);
    if (A > 0) w.head_out.middleCols(2 * K, A) += s.rightCols(A);
  }
  const auto& h = w.head_out;
  const auto ts = row_of(cfg_.target_scale).array();
  out.mean = (h.leftCols(K).array().rowwise() * ts).rowwise() + row_of(cfg_.target_offset).array();
  out.std = h.middleCols(K, K).unaryExpr([](double v) { return softplus(v); }).array().rowwise() * ts;
  if (A > 0) {
    const auto as = row_of(cfg_.aux_scale).array();
    out.aux_mean =
        (h.middleCols(2 * K, A).array().rowwise() * as).rowwise() + row_of(cfg_.aux_offset).array();
    out.aux_std =
        h.middleCols(2 * K + A, A).unaryExpr([](double v) { return softplus(v); }).array().rowwise() * as;
  } else {
    out.aux_mean.resize(T * B, 0);
    out.aux_std.resize(T * B, 0);
  }
}

double Network::loss(const Eigen::VectorXd& params, const RowMat& x, const RowMat& target,
                     const RowMat& aux_target, Index T, Index B, double aux_weight,
                     Eigen::VectorXd* grad) const {
  const Index K = cfg_.n_state_outputs;
  const Index A = cfg_.aux_outputs;
  if (target.rows() != T * B || target.cols() != K) {
    throw DimensionMismatchError("network: target has the wrong shape");
  }
  const bool use_aux = A > 0 && aux_weight != 0.0;
  if (use_aux && (aux_target.rows() != T * B || aux_target.cols() != A)) {
    throw DimensionMismatchError("network: aux target has the wrong shape");
  }
  Workspace ws;
  Output out;
  forward(params, x, T, B, out, &ws);
  const double norm = 1.0 / static_cast<double>(T * B * K);

  RowMat dmean, dstd, daux_mean, daux_std;
  const bool want = grad != nullptr;
  double total = gaussian_nll_sum(out.mean, out.std, target, want ? &dmean : nullptr,
                                  want ? &dstd : nullptr);
  if (use_aux) {
    total += aux_weight * gaussian_nll_sum(out.aux_mean, out.aux_std, aux_target,
                                           want ? &daux_mean : nullptr,
                                           want ? &daux_std : nullptr);
  }
  if (!want) return total * norm;

  // Back through the output transforms into head pre-activations.
  const auto& h = ws.head_out;
  RowMat dh = RowMat::Zero(h.rows(), h.cols());
  const auto ts = row_of(cfg_.target_scale).array();
  const auto sig = [](double v) { return sigmoid(v); };
  dh.leftCols(K).array() = (dmean.array().rowwise() * ts) * norm;
  dh.middleCols(K, K).array() =
      (dstd.array().rowwise() * ts) * h.middleCols(K, K).unaryExpr(sig).array() * norm;
  if (use_aux) {
    const auto as = row_of(cfg_.aux_scale).array();
    const double s = aux_weight * norm;
    dh.middleCols(2 * K, A).array() = (daux_mean.array().rowwise() * as) * s;
    dh.middleCols(2 * K + A, A).array() =
        (daux_std.array().rowwise() * as) * h.middleCols(2 * K + A, A).unaryExpr(sig).array() * s;
  }

  grad->setZero(num_params());
  RowMat drnn, dconv;
  head_.backward(params, ws.rnn, ws.head_cache, dh, *grad, drnn);
  rnn_.backward(params, ws.conv, ws.rnn_cache, drnn, T, B, *grad, dconv);
  if (skip_.size() > 0) {
    const Index K = cfg_.n_state_outputs;
    const Index A = cfg_.aux_outputs;
    RowMat ds(dh.rows(), K + A);
    ds.leftCols(K) = dh.leftCols(K);
    if (A > 0) ds.rightCols(A) = dh.middleCols(2 * K, A);
    view(*grad, skip_).noalias() += ws.conv.transpose() * ds;
    dconv.noalias() += ds * view(params, skip_).transpose();
  }
  conv_.backward(params, ws.conv_cache, dconv, *grad);
  return total * norm;
}

MarginalGaussianPosterior Network::predict(const Eigen::VectorXd& params,
                                           const Eigen::MatrixXd& series) const {
  if (series.cols() != cfg_.input_dim) {
    throw DimensionMismatchError("network: series has " + std::to_string(series.cols()) +
                                 " columns, expected " + std::to_string(cfg_.input_dim));
  }
  const RowMat x = series;
  Output out;
  forward(params, x, series.rows(), 1, out);
  return {out.mean, out.std};
}

RowMat pack_time_major(const std::vector<Eigen::MatrixXd>& series) {
  if (series.empty()) throw DimensionMismatchError("pack_time_major: empty batch");
  const Index B = static_cast<Index>(series.size());
  const Index T = series.front().rows();
  const Index D = series.front().cols();
  RowMat out(T * B, D);
  for (Index b = 0; b < B; ++b) {
    const auto& s = series[b];
    if (s.rows() != T || s.cols() != D) {
      throw DimensionMismatchError("pack_time_major: members differ in shape");
    }
    for (Index t = 0; t < T; ++t) out.row(t * B + b) = s.row(t);
  }
  return out;
}

Eigen::MatrixXd unpack_member(const RowMat& packed, Index T, Index B, Index b) {
  Eigen::MatrixXd out(T, packed.cols());
  for (Index t = 0; t < T; ++t) out.row(t) = packed.row(t * B + b);
  return out;
}

}  // namespace amortss::nn
