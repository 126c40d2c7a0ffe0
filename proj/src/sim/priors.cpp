#include "amortss/sim/priors.hpp"

#include <cmath>
#include <numbers>

#include "amortss/core/transforms.hpp"

namespace amortss::sim {

namespace {

struct GammaShapeScale {
  double shape;
  double scale;
};

GammaShapeScale gamma_from_moments(double mean, double sd) {
  return {(mean / sd) * (mean / sd), sd * sd / mean};
}

struct BetaShapes {
  double alpha;
  double beta;
};

BetaShapes beta_from_moments(double mean, double sd) {
  const double nu = mean * (1.0 - mean) / (sd * sd) - 1.0;
  return {mean * nu, (1.0 - mean) * nu};
}

double draw_untruncated(const PriorSpec& s, RngStream& rng) {
  switch (s.family) {
    case PriorFamily::Normal:
      return rng.normal(s.a, s.b);
    case PriorFamily::Gamma: {
      const auto g = gamma_from_moments(s.a, s.b);
      return rng.gamma(g.shape, g.scale);
    }
    case PriorFamily::Beta: {
      const auto bs = beta_from_moments(s.a, s.b);
      const double x = rng.gamma(bs.alpha, 1.0);
      const double y = rng.gamma(bs.beta, 1.0);
      return x / (x + y);
    }
    case PriorFamily::Uniform:
      return rng.uniform(s.a, s.b);
    case PriorFamily::InvGamma:
      return 0.5 * s.b * s.a * s.a / rng.gamma(s.b, 1.0);
  }
  return 0.0;
}

}  // namespace

bool in_support(const PriorSpec& s, double x) {
  if (!std::isfinite(x) || !(x > s.lower) || !(x < s.upper)) return false;
  switch (s.family) {
    case PriorFamily::Normal: return true;
    case PriorFamily::Gamma:
    case PriorFamily::InvGamma: return x > 0.0;
    case PriorFamily::Beta: return x > 0.0 && x < 1.0;
    case PriorFamily::Uniform: return x > s.a && x < s.b;
  }
  return false;
}

double prior_draw(const PriorSpec& s, RngStream& rng) {
  for (;;) {
    const double x = draw_untruncated(s, rng);
    if (in_support(s, x)) return x;
  }
}

double prior_log_density(const PriorSpec& s, double x) {
  if (!in_support(s, x)) return -std::numeric_limits<double>::infinity();
  switch (s.family) {
    case PriorFamily::Normal: {
      const double z = (x - s.a) / s.b;
      return -0.5 * z * z - std::log(s.b) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case PriorFamily::Gamma: {
      const auto g = gamma_from_moments(s.a, s.b);
      return (g.shape - 1.0) * std::log(x) - x / g.scale - std::lgamma(g.shape) -
             g.shape * std::log(g.scale);
    }
    case PriorFamily::Beta: {
      const auto bs = beta_from_moments(s.a, s.b);
      return (bs.alpha - 1.0) * std::log(x) + (bs.beta - 1.0) * std::log1p(-x) +
             std::lgamma(bs.alpha + bs.beta) - std::lgamma(bs.alpha) - std::lgamma(bs.beta);
    }
    case PriorFamily::Uniform:
      return -std::log(s.b - s.a);
    case PriorFamily::InvGamma: {
      const double scale = 0.5 * s.b * s.a * s.a;
      return s.b * std::log(scale) - std::lgamma(s.b) - (s.b + 1.0) * std::log(x) - scale / x;
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double to_unconstrained(const PriorSpec& s, double x) {
  switch (s.family) {
    case PriorFamily::Normal: return x;
    case PriorFamily::Gamma:
    case PriorFamily::InvGamma: return std::log(x);
    case PriorFamily::Beta: return std::log(x) - std::log1p(-x);
    case PriorFamily::Uniform: {
      const double p = (x - s.a) / (s.b - s.a);
      return std::log(p) - std::log1p(-p);
    }
  }
  return x;
}

double from_unconstrained(const PriorSpec& s, double u) {
  switch (s.family) {
    case PriorFamily::Normal: return u;
    case PriorFamily::Gamma:
    case PriorFamily::InvGamma: return std::exp(u);
    case PriorFamily::Beta: return sigmoid(u);
    case PriorFamily::Uniform: return s.a + (s.b - s.a) * sigmoid(u);
  }
  return u;
}

double log_jacobian(const PriorSpec& s, double u) {
  switch (s.family) {
    case PriorFamily::Normal: return 0.0;
    case PriorFamily::Gamma:
    case PriorFamily::InvGamma: return u;
    case PriorFamily::Beta: return -softplus(u) - softplus(-u);
    case PriorFamily::Uniform: return std::log(s.b - s.a) - softplus(u) - softplus(-u);
  }
  return 0.0;
}

}  // namespace amortss::sim
