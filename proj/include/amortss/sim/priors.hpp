#pragma once

#include <limits>
#include <string_view>

#include "amortss/core/rng.hpp"

namespace amortss::sim {

/// Normal, gamma and beta are parameterized by mean `a` and standard
/// deviation `b`. Uniform is U(a, b). InvGamma(a, b) has density
/// proportional to x^{-b-1} exp(-b a^2 / (2x)), i.e. shape b and scale b a^2 / 2.
enum class PriorFamily { Normal, Gamma, Beta, Uniform, InvGamma };

struct PriorSpec {
  std::string_view name;
  PriorFamily family;
  double a;
  double b;
  /// Optional truncation of the support (used for normals).
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

double prior_draw(const PriorSpec& spec, RngStream& rng);
/// Log density including normalizing constants, -inf outside the support.
/// Truncated normals are not renormalized.
double prior_log_density(const PriorSpec& spec, double x);
bool in_support(const PriorSpec& spec, double x);

/// Bijection between the support and the real line: identity for normals,
/// log for gamma / inverse gamma, logit for beta, scaled logistic for uniform.
double to_unconstrained(const PriorSpec& spec, double x);
double from_unconstrained(const PriorSpec& spec, double u);
/// log |dx/du| at u.
double log_jacobian(const PriorSpec& spec, double u);

}  // namespace amortss::sim
