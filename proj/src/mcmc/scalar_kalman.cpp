#include "amortss/mcmc/scalar_kalman.hpp"

#include <cmath>
#include <numbers>

namespace amortss::mcmc {

namespace {

// Runs the filter; stores filtered moments when the outputs are non-null.
double filter(const Ar1Model& m, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
              const Eigen::VectorXd& h, Eigen::VectorXd* fm, Eigen::VectorXd* fv) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double a = m.mean, p = m.p1, ll = 0.0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    if (t > 0) {
      a = m.mean + m.phi * (a - m.mean);
      p = m.phi * m.phi * p + m.q;
    }
    const double v = y[t] - m.loading * a - d[t];
    const double f = m.loading * m.loading * p + h[t];
    ll -= 0.5 * (log2pi + std::log(f) + v * v / f);
    const double k = p * m.loading / f;
    a += k * v;
    p *= 1.0 - k * m.loading;
    if (fm) (*fm)[t] = a;
    if (fv) (*fv)[t] = p;
  }
  return ll;
}

}  // namespace

double ar1_loglik(const Ar1Model& m, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                  const Eigen::VectorXd& h) {
  return filter(m, y, d, h, nullptr, nullptr);
}

Eigen::VectorXd ar1_ffbs(const Ar1Model& m, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                         const Eigen::VectorXd& h, RngStream& rng) {
  const Eigen::Index T = y.size();
  Eigen::VectorXd fm(T), fv(T), x(T);
  filter(m, y, d, h, &fm, &fv);
  x[T - 1] = fm[T - 1] + std::sqrt(std::max(fv[T - 1], 0.0)) * rng.normal();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const double pred = m.phi * m.phi * fv[t] + m.q;
    const double j = pred > 0.0 ? fv[t] * m.phi / pred : 0.0;
    const double mu = fm[t] + j * (x[t + 1] - m.mean - m.phi * (fm[t] - m.mean));
    const double var = std::max(fv[t] - j * m.phi * fv[t], 0.0);
    x[t] = mu + std::sqrt(var) * rng.normal();
  }
  return x;
}

}  // namespace amortss::mcmc
