#include "amortss/mcmc/samplers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "amortss/core/errors.hpp"
#include "amortss/mcmc/adaptive.hpp"
#include "amortss/mcmc/ksc.hpp"
#include "amortss/mcmc/scalar_kalman.hpp"
#include "amortss/ssm/kalman.hpp"

namespace amortss::mcmc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Running mean and variance of the state path over post burn-in iterations.
struct StateMoments {
  std::int64_t n = 0;
  MatrixXd mean, m2;

  void add(const MatrixXd& x) {
    if (n == 0) {
      mean = MatrixXd::Zero(x.rows(), x.cols());
      m2 = MatrixXd::Zero(x.rows(), x.cols());
    }
    ++n;
    const MatrixXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2.array() += delta.array() * (x - mean).array();
  }
  MatrixXd std() const {
    if (n < 2) return MatrixXd::Zero(mean.rows(), mean.cols());
    return (m2 / static_cast<double>(n - 1)).cwiseSqrt();
  }
};

void check_options(const McmcOptions& o) {
  if (o.n_iter < 2) throw std::invalid_argument("mcmc: n_iter must be at least 2");
  if (o.thin < 0) throw std::invalid_argument("mcmc: thin must be non-negative");
  if (!(o.burn_in_fraction >= 0.0 && o.burn_in_fraction < 1.0))
    throw std::invalid_argument("mcmc: burn_in_fraction must lie in [0, 1)");
}

struct Recorder {
  const McmcOptions& opts;
  McmcChain& chain;
  StateMoments moments;

  void state(int iter, const MatrixXd& x) {
    if (iter < chain.burn_in) return;
    moments.add(x);
    const int k = iter - static_cast<int>(chain.burn_in);
    if (opts.thin > 0 && k % opts.thin == 0) {
      chain.state_draws.push_back(x);
      chain.state_draw_iter.push_back(iter);
    }
  }
  void finish() {
    chain.state_mean = moments.mean;
    chain.state_std = moments.std();
  }
};

// Indicator-dependent means and variances of the log chi-square noise.
void mixture_moments(const std::vector<int>& z, VectorXd& d, VectorXd& h) {
  const auto& mix = ksc_mixture();
  d.resize(static_cast<Eigen::Index>(z.size()));
  h.resize(d.size());
  for (Eigen::Index t = 0; t < d.size(); ++t) {
    d[t] = mix.mean[z[static_cast<std::size_t>(t)]];
    h[t] = mix.var[z[static_cast<std::size_t>(t)]];
  }
}

Ar1Model sv_state_model(const sim::SvParams& p) {
  const double s = 0.5 * p.sigma();
  const double sd = sim::sv_stationary_std(p);
  return {0.5 * p.kappa, p.rho(), s * s, sd * sd, 2.0};
}

double prior_mean(const sim::PriorSpec& s) {
  switch (s.family) {
    case sim::PriorFamily::Uniform:
      return 0.5 * (s.a + s.b);
    case sim::PriorFamily::InvGamma:
      return s.b * s.a * s.a / 2.0 / (s.b - 1.0);
    default:
      return s.a;
  }
}

template <std::size_t N>
std::array<double, N> from_u(const std::array<sim::PriorSpec, N>& specs, const VectorXd& u) {
  std::array<double, N> v{};
  for (std::size_t i = 0; i < N; ++i) v[i] = sim::from_unconstrained(specs[i], u[static_cast<Eigen::Index>(i)]);
  return v;
}

template <std::size_t N>
VectorXd to_u(const std::array<sim::PriorSpec, N>& specs, const std::array<double, N>& v) {
  VectorXd u(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) u[static_cast<Eigen::Index>(i)] = sim::to_unconstrained(specs[i], v[i]);
  return u;
}

// Log prior density of the prior variables plus the log Jacobian of the
// map from unconstrained coordinates.
template <std::size_t N>
double log_prior_u(const std::array<sim::PriorSpec, N>& specs, const VectorXd& u) {
  double lp = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double x = sim::from_unconstrained(specs[i], u[k]);
    lp += sim::prior_log_density(specs[i], x) + sim::log_jacobian(specs[i], u[k]);
    if (!std::isfinite(lp)) return kNegInf;
  }
  return lp;
}

template <std::size_t N>
std::vector<std::string> spec_names(const std::array<sim::PriorSpec, N>& specs) {
  std::vector<std::string> out;
  for (const auto& s : specs) out.emplace_back(s.name);
  return out;
}

}  // namespace

McmcChain mcmc_sv_log_abs(const VectorXd& log_abs_y, const McmcOptions& opts, RngStream& rng) {
  check_options(opts);
  const Eigen::Index T = log_abs_y.size();
  if (T < 2) throw DimensionMismatchError("mcmc_sv: series needs at least 2 observations");
  const VectorXd obs = 2.0 * log_abs_y;  // 2 SV_t + log eps_t^2

  McmcChain chain;
  chain.param_names = {"alpha", "kappa", "psi"};
  chain.state_names = {"SV"};
  chain.params.resize(opts.n_iter, 3);
  chain.burn_in = static_cast<std::int64_t>(opts.burn_in_fraction * opts.n_iter);
  Recorder rec{opts, chain, {}};

  AdaptiveProposal proposal(3, 3.0, opts.scale, opts.sigma0);
  BlockStats stats;
  stats.name = "alpha,kappa,psi";
  VectorXd theta = VectorXd::Zero(3);
  VectorXd sv = (obs.array() + 1.2704) / 2.0;
  VectorXd d, h;

  auto params_of = [](const VectorXd& th) { return sim::SvParams{th[0], th[1], th[2]}; };
  for (int it = 0; it < opts.n_iter; ++it) {
    const auto z = ksc_sample_indicators(sv, obs, 2.0, rng);
    mixture_moments(z, d, h);
    auto log_target = [&](const VectorXd& th) {
      const auto p = params_of(th);
      const double lp = sim::sv_log_prior(p);
      const Ar1Model m = sv_state_model(p);
      if (!(m.q > 0.0) || !(m.p1 > 0.0) || !std::isfinite(m.p1)) return kNegInf;
      const double ll = ar1_loglik(m, obs, d, h);
      return std::isfinite(ll) ? lp + ll : kNegInf;
    };
    const auto step = rwmh_adaptive_step(theta, log_target(theta), log_target, proposal, rng);
    ++stats.proposed;
    stats.accepted += step.accepted;
    theta = step.theta;
    chain.params.row(it) = theta.transpose();

    sv = ar1_ffbs(sv_state_model(params_of(theta)), obs, d, h, rng);
    rec.state(it, sv);
  }
  stats.proposal_cov = proposal.covariance();
  chain.blocks.push_back(std::move(stats));
  rec.finish();
  return chain;
}

McmcChain mcmc_sv(const TimeSeries& y, const McmcOptions& opts, RngStream& rng) {
  if (y.dim() != 1) throw DimensionMismatchError("mcmc_sv: expected a univariate series");
  const VectorXd log_abs =
      (opts.log_offset + y.values().col(0).array().abs()).log().matrix();
  return mcmc_sv_log_abs(log_abs, opts, rng);
}

ssm::DsgeStructuralParams dsge_prior_mean_structural() {
  const auto& specs = sim::dsge_structural_priors();
  std::array<double, sim::kNumStructural> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = prior_mean(specs[i]);
  return sim::from_prior_vars(v);
}

sim::SvProcessParams dsge_prior_mean_sv() {
  const auto& specs = sim::dsge_sv_priors();
  std::array<double, sim::kNumSvProcess> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = prior_mean(specs[i]);
  return sim::sv_from_prior_vars(v);
}

namespace {

// Linear Gaussian form of the solved model with shock variances exp(SV_t).
// With `augment` the shocks are appended to the state so the simulation
// smoother returns them.
ssm::LinearGaussianSsmd dsge_ssm(const sim::DsgeCacheEntry& e, const MatrixXd& sv, bool augment) {
  const Eigen::Index T = sv.rows();
  const Eigen::Index n = e.A.rows(), m = e.B.cols();
  ssm::LinearGaussianSsmd model;
  model.q_path.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t)
    model.q_path.push_back(sv.row(t).array().exp().matrix().asDiagonal());
  const MatrixXd& q1 = model.q_path.front();
  const MatrixXd p1 = e.A * e.P * e.A.transpose() + e.B * q1 * e.B.transpose();
  const MatrixXd C = sim::dsge_obs_loading();
  if (!augment) {
    model.A = e.A;
    model.B = e.B;
    model.C = C;
    model.P1 = p1;
  } else {
    model.A = MatrixXd::Zero(n + m, n + m);
    model.A.topLeftCorner(n, n) = e.A;
    model.B.resize(n + m, m);
    model.B << e.B, MatrixXd::Identity(m, m);
    model.C = MatrixXd::Zero(C.rows(), n + m);
    model.C.leftCols(n) = C;
    model.P1.resize(n + m, n + m);
    model.P1 << p1, e.B * q1, q1 * e.B.transpose(), q1;
  }
  model.a1 = VectorXd::Zero(model.A.rows());
  model.d = sim::dsge_intercept(e.theta);
  model.H = MatrixXd::Zero(C.rows(), C.rows());
  return model;
}

}  // namespace

McmcChain mcmc_dsge(const TimeSeries& obs_ts, const DsgeMcmcOptions& opts, RngStream& rng) {
  check_options(opts);
  const MatrixXd& obs = obs_ts.values();
  if (obs.cols() != 3) throw DimensionMismatchError("mcmc_dsge: expected 3 observables");
  const Eigen::Index T = obs.rows();
  if (T < 2) throw DimensionMismatchError("mcmc_dsge: series needs at least 2 observations");
  const auto& th_specs = sim::dsge_structural_priors();
  const auto& sv_specs = sim::dsge_sv_priors();

  McmcChain chain;
  chain.param_names = spec_names(th_specs);
  for (auto& s : spec_names(sv_specs)) chain.param_names.push_back(std::move(s));
  chain.state_names = {"SV_g", "SV_z", "SV_R"};
  chain.params.resize(opts.n_iter, sim::kNumStructural + sim::kNumSvProcess);
  chain.burn_in = static_cast<std::int64_t>(opts.burn_in_fraction * opts.n_iter);
  Recorder rec{opts, chain, {}};

  sim::DsgeCacheEntry entry;
  if (!sim::make_cache_entry(opts.theta0.value_or(dsge_prior_mean_structural()), entry) &&
      !sim::make_cache_entry(ssm::DsgeStructuralParams{}, entry))
    throw NumericalError("mcmc_dsge: starting parameters have no stable solution");
  VectorXd u_th = to_u(th_specs, sim::to_prior_vars(entry.theta));
  VectorXd u_sv = to_u(sv_specs, sim::to_prior_vars(opts.sv0.value_or(dsge_prior_mean_sv())));
  MatrixXd sv = MatrixXd::Zero(T, 3);

  AdaptiveProposal prop_th(sim::kNumStructural, 15.0, opts.scale, opts.sigma0);
  AdaptiveProposal prop_sv(sim::kNumSvProcess, 6.0, opts.scale, opts.sigma0);
  BlockStats st_th, st_sv;
  st_th.name = "structural";
  st_sv.name = "sv_process";

  // log p(obs | theta, SV) + log prior; a successful solve is left in
  // `candidate` so an accepted proposal need not be solved again.
  sim::DsgeCacheEntry candidate;
  auto theta_loglik = [&](const sim::DsgeCacheEntry& en) {
    return ssm::kalman_loglik(dsge_ssm(en, sv, false), obs);
  };
  auto theta_target = [&](const VectorXd& u) {
    const double lp = log_prior_u(th_specs, u);
    if (!std::isfinite(lp) ||
        !sim::make_cache_entry(sim::from_prior_vars(from_u(th_specs, u)), candidate)) {
      ++st_th.rejected_support;
      return kNegInf;
    }
    const double ll = theta_loglik(candidate);
    return std::isfinite(ll) ? lp + ll : kNegInf;
  };

  const double log_c = std::log(opts.log_offset);
  MatrixXd e_obs(T, 3);
  std::array<VectorXd, 3> d, h;
  std::array<std::vector<int>, 3> z;

  for (int it = 0; it < opts.n_iter; ++it) {
    // (1) structural parameters given SV
    if (!opts.fix_structural) {
      const double current = log_prior_u(th_specs, u_th) + theta_loglik(entry);
      const auto step = rwmh_adaptive_step(u_th, current, theta_target, prop_th, rng);
      ++st_th.proposed;
      if (step.accepted) {
        ++st_th.accepted;
        u_th = step.theta;
        entry = candidate;
      }
    }
    chain.params.row(it).head(sim::kNumStructural) = u_th.transpose();

    // (2) structural shocks given theta and SV
    const ssm::SimulationSmoother<double> smoother(dsge_ssm(entry, sv, true), obs);
    const MatrixXd draw = smoother.draw(rng);
    const MatrixXd e = draw.rightCols(3);

    // (3) mixture indicators on 2 log(c + |e|) = SV + log eps^2
    for (int i = 0; i < 3; ++i) {
      for (Eigen::Index t = 0; t < T; ++t)
        e_obs(t, i) = 2.0 * sim::log_add_exp(log_c, std::log(std::abs(e(t, i))));
      z[i] = ksc_sample_indicators(sv.col(i), e_obs.col(i), 1.0, rng);
      mixture_moments(z[i], d[i], h[i]);
    }

    // (4) log-volatility process parameters given shocks and indicators
    auto ar1_of = [](double sigma, double rho) {
      return Ar1Model{0.0, rho, sigma * sigma, sigma * sigma / (1.0 - rho * rho), 1.0};
    };
    auto sv_target = [&](const VectorXd& u) {
      const double lp = log_prior_u(sv_specs, u);
      if (!std::isfinite(lp)) return kNegInf;
      const auto p = sim::sv_from_prior_vars(from_u(sv_specs, u));
      double ll = 0.0;
      for (int i = 0; i < 3; ++i) {
        if (!(std::abs(p.rho[i]) < 1.0) || !(p.sigma[i] > 0.0)) return kNegInf;
        ll += ar1_loglik(ar1_of(p.sigma[i], p.rho[i]), e_obs.col(i), d[i], h[i]);
      }
      return std::isfinite(ll) ? lp + ll : kNegInf;
    };
    const auto sv_step = rwmh_adaptive_step(u_sv, sv_target(u_sv), sv_target, prop_sv, rng);
    ++st_sv.proposed;
    st_sv.accepted += sv_step.accepted;
    u_sv = sv_step.theta;
    chain.params.row(it).tail(sim::kNumSvProcess) = u_sv.transpose();

    // (5) log-volatility paths
    const auto p = sim::sv_from_prior_vars(from_u(sv_specs, u_sv));
    for (int i = 0; i < 3; ++i)
      sv.col(i) = ar1_ffbs(ar1_of(p.sigma[i], p.rho[i]), e_obs.col(i), d[i], h[i], rng);
    rec.state(it, sv);
  }

  // Report parameters in prior-variable coordinates.
  for (int it = 0; it < opts.n_iter; ++it) {
    for (int k = 0; k < sim::kNumStructural; ++k)
      chain.params(it, k) = sim::from_unconstrained(th_specs[k], chain.params(it, k));
    for (int k = 0; k < sim::kNumSvProcess; ++k) {
      const int c = sim::kNumStructural + k;
      chain.params(it, c) = sim::from_unconstrained(sv_specs[k], chain.params(it, c));
    }
  }
  st_th.proposal_cov = prop_th.covariance();
  st_sv.proposal_cov = prop_sv.covariance();
  chain.blocks.push_back(std::move(st_th));
  chain.blocks.push_back(std::move(st_sv));
  rec.finish();
  return chain;
}

}  // namespace amortss::mcmc
