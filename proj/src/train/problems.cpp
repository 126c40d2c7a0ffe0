#include <algorithm>

#include "amortss/core/errors.hpp"
#include "amortss/train/problem.hpp"

namespace amortss::train {

using Eigen::Index;

std::string model_name(ModelId id) {
  switch (id) {
    case ModelId::Sv: return "sv";
    case ModelId::Dsge: return "dsge";
    case ModelId::Sa: return "sa";
  }
  return "?";
}

ModelId parse_model(const std::string& name) {
  if (name == "sv") return ModelId::Sv;
  if (name == "dsge") return ModelId::Dsge;
  if (name == "sa") return ModelId::Sa;
  throw UnknownModelError(name);
}

Batch SvProblem::simulate(Index T, Index B, RngStream& rng) const {
  Batch out;
  out.T = T;
  out.B = B;
  out.x.resize(T * B, 1);
  out.target.resize(T * B, 1);
  for (Index b = 0; b < B; ++b) {
    auto member = rng.derive("sv", static_cast<std::uint64_t>(b));
    const auto params = sim::sv_draw_prior(member);
    const auto path = sim::sv_simulate(params, T, member, c_);
    for (Index t = 0; t < T; ++t) {
      out.x(t * B + b, 0) = path.log_abs_y[t];
      out.target(t * B + b, 0) = path.sv[t];
    }
  }
  return out;
}

DsgeProblem::DsgeProblem(std::shared_ptr<const sim::DsgeSolutionCache> cache, double c)
    : cache_(std::move(cache)), c_(c) {
  if (!cache_ || cache_->entries.empty()) {
    throw std::invalid_argument("DsgeProblem: empty solution cache");
  }
}

Batch DsgeProblem::simulate(Index T, Index B, RngStream& rng) const {
  Batch out;
  out.T = T;
  out.B = B;
  out.x.resize(T * B, 3);
  out.target.resize(T * B, 3);
  out.aux.resize(T * B, 3);
  const int n = static_cast<int>(cache_->entries.size());
  for (Index b = 0; b < B; ++b) {
    auto member = rng.derive("dsge", static_cast<std::uint64_t>(b));
    const auto& entry = cache_->entries[member.uniform_int(0, n - 1)];
    const auto sv = sim::dsge_draw_sv_process(member);
    const auto path = sim::dsge_simulate(entry, sv, T, member, c_);
    for (Index t = 0; t < T; ++t) {
      out.x.row(t * B + b) = path.obs.row(t);
      out.target.row(t * B + b) = path.sv.row(t);
      out.aux.row(t * B + b) = path.e_tilde.row(t);
    }
  }
  return out;
}

Batch SeasonalProblem::simulate(Index T, Index B, RngStream& rng) const {
  const auto samples = sim::seasonal_generate_batch(static_cast<int>(B), static_cast<int>(T), cfg_, rng);
  Batch out;
  out.T = T;
  out.B = static_cast<Index>(samples.size());
  out.x.resize(T * out.B, 1);
  out.target.resize(T * out.B, 1);
  out.has_break.resize(samples.size());
  for (Index b = 0; b < out.B; ++b) {
    const auto& s = samples[b];
    for (Index t = 0; t < T; ++t) {
      out.x(t * out.B + b, 0) = s.y[t];
      out.target(t * out.B + b, 0) = s.sa[t];
    }
    out.has_break[b] = s.has_break() ? 1 : 0;
  }
  return out;
}

namespace {

double quantile(std::vector<double>& v, double q) {
  const std::size_t k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

ColumnScaling robust_scaling(const nn::RowMat& m) {
  ColumnScaling s;
  for (Index k = 0; k < m.cols(); ++k) {
    std::vector<double> col(m.rows());
    for (Index i = 0; i < m.rows(); ++i) col[i] = m(i, k);
    const double med = quantile(col, 0.5);
    const double iqr = quantile(col, 0.75) - quantile(col, 0.25);
    s.offset.push_back(med);
    s.scale.push_back(iqr > 0 ? iqr / 1.349 : 1.0);
  }
  return s;
}

}  // namespace amortss::train
