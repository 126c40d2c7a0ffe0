#include "amortss/sim/seasonal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "amortss/core/transforms.hpp"

namespace amortss::sim {

namespace {

// Elementary symmetric polynomials of three roots.
struct Cubic {
  double e1, e2, e3;
};

Cubic symmetric(const double r[3]) {
  return {r[0] + r[1] + r[2], r[0] * r[1] + r[1] * r[2] + r[0] * r[2], r[0] * r[1] * r[2]};
}

}  // namespace

bool SeasonalSample::has_break() const {
  return std::any_of(break_flags.begin(), break_flags.end(), [](std::uint8_t f) { return f != 0; });
}

int seasonal_draw_length(const SeasonalConfig& config, RngStream& rng) {
  return rng.uniform_int(config.T_lb, config.T_ub);
}

SeasonalSample seasonal_generate(int T, const SeasonalConfig& cfg, RngStream& rng) {
  if (T < 2) throw std::invalid_argument("seasonal_generate: T must be at least 2");
  // Index k = 0..N-1 corresponds to t = k - burn_in + 1, so t = 1..T are
  // the last T entries.
  const int N = cfg.burn_in + T;

  // Non-seasonal component.
  Eigen::VectorXd e(N);
  for (int k = 0; k < N; ++k) {
    const double eta = rng.normal(0.0, 3.0);
    e(k) = rng.student_t(3.0 + std::abs(eta));
  }
  double ar[3], ma[3];
  for (double& r : ar) r = rng.bernoulli(0.5) ? rng.uniform(-0.5, 0.98) : 0.0;
  for (double& r : ma) r = rng.bernoulli(0.5) ? rng.uniform(-0.5, 0.98) : 0.0;
  const Cubic a = symmetric(ar), m = symmetric(ma);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  for (int k = 3; k < N; ++k) {
    const double shift = rng.bernoulli(cfg.shift_prob) ? rng.normal(0.0, 20.0) : 0.0;
    const double eps = e(k) + m.e1 * e(k - 1) + m.e2 * e(k - 2) + m.e3 * e(k - 3) + shift;
    x(k) = a.e1 * x(k - 1) - a.e2 * x(k - 2) + a.e3 * x(k - 3) + eps;
  }
  const double c = rng.normal(0.0, 0.005);
  const double x_std = population_std(x);
  const double scale = rng.normal(0.0, x_std > 0.0 ? 0.007 / x_std : 0.0);
  const Eigen::VectorXd ns_star = (c + scale * x.array()).matrix();
  Eigen::VectorXd ns = ns_star;
  if (rng.bernoulli(0.5)) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k) ns(k) = acc += ns_star(k);
  }

  // Seasonal component.
  const double sigma = rng.normal(0.0, 0.2 / std::sqrt(40.0));
  std::vector<std::uint8_t> indicator(N);
  for (int k = 0; k < N; ++k) indicator[k] = rng.bernoulli(cfg.break_prob) ? 1 : 0;
  std::vector<std::uint8_t> z(N, 0);
  for (int k = 3; k < N; ++k) {
    z[k] = cfg.trigger == BreakTrigger::Single
               ? indicator[k]
               : static_cast<std::uint8_t>(indicator[k] & indicator[k - 1] & indicator[k - 2] &
                                           indicator[k - 3]);
  }
  Eigen::VectorXd s(N);
  for (int k = 0; k < 3; ++k) s(k) = rng.normal();
  for (int k = 3; k < N; ++k) {
    const double eS = rng.normal();
    s(k) = z[k] ? eS : -(s(k - 1) + s(k - 2) + s(k - 3) + sigma * eS);
  }
  const double scale_s =
      cfg.seasonal_scale_multiplier * rng.normal(0.0, 3.0 * population_std(ns_star));

  const Eigen::VectorXd y_star = scale_s * s + ns;
  const Eigen::VectorXd y_window = y_star.tail(T);
  SeasonalSample out;
  out.mean = y_window.mean();
  out.std = population_std(y_window);
  if (!(out.std > 0.0)) throw ZeroVarianceError();
  out.y = ((y_window.array() - out.mean) / out.std).matrix();
  out.sa = ((ns.tail(T).array() - out.mean) / out.std).matrix();
  out.break_flags.assign(z.end() - T, z.end());
  return out;
}

SeasonalSample reversed(const SeasonalSample& in) {
  SeasonalSample out = in;
  out.y = in.y.reverse();
  out.sa = in.sa.reverse();
  std::reverse(out.break_flags.begin(), out.break_flags.end());
  return out;
}

std::vector<SeasonalSample> seasonal_generate_batch(int B, int T, const SeasonalConfig& cfg,
                                                    const RngStream& rng) {
  if (B < 1) throw std::invalid_argument("seasonal_generate_batch: B must be positive");
  std::vector<SeasonalSample> out(2 * static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    RngStream member = rng.derive("seasonal", static_cast<std::uint64_t>(b));
    out[b] = seasonal_generate(T, cfg, member);
    out[B + b] = reversed(out[b]);
  }
  return out;
}

std::vector<SeasonalSample> seasonal_generate_batch(int B, const SeasonalConfig& cfg,
                                                    RngStream& rng) {
  const int T = seasonal_draw_length(cfg, rng);
  return seasonal_generate_batch(B, T, cfg, rng.derive("members", rng()));
}

}  // namespace amortss::sim
