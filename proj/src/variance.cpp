#include "plmm/variance.hpp"

#include <cmath>
#include <numbers>

namespace plmm {

double profile_tau2(const Vector& s, const Vector& z, double eta) {
  const auto d = (eta * s.array() + (1.0 - eta)).eval();
  return (z.array().square() / d).mean();
}

double profile_loglik(const Vector& s, const Vector& z, double eta) {
  const auto n = static_cast<double>(s.size());
  const auto d = (eta * s.array() + (1.0 - eta)).eval();
  const double tau2 = (z.array().square() / d).mean();
  return -0.5 * (n * std::log(2.0 * std::numbers::pi * tau2) + d.log().sum() + n);
}

EtaEstimate estimate_eta(const Spectrum& spectrum, const Vector& y_centered, const EtaOptions& opts) {
  const Index n = y_centered.size();
  if (n != spectrum.n()) throw InputError("estimate_eta: y length does not match spectrum");
  if (n < 3) throw InputError("estimate_eta: need n >= 3");
  if (opts.grid_size < 2) throw InputError("estimate_eta: grid_size must be >= 2");
  const double scale = std::max(1.0, y_centered.cwiseAbs().maxCoeff());
  if (std::abs(y_centered.mean()) > 1e-8 * scale) throw InputError("estimate_eta: y is not centered");
  if (y_centered.squaredNorm() == 0.0) throw InputError("estimate_eta: y has zero variance");

  const Vector z = spectrum.U.transpose() * y_centered;
  const Vector& s = spectrum.s;
  auto ll = [&](double eta) { return profile_loglik(s, z, eta); };

  const int g = opts.grid_size;
  const double step = opts.upper / (g - 1);
  int best = 0;
  double best_ll = ll(0.0);
  for (int i = 1; i < g; ++i) {
    const double v = ll(i * step);
    if (v > best_ll) {
      best_ll = v;
      best = i;
    }
  }

  double lo = std::max(0, best - 1) * step;
  double hi = std::min(g - 1, best + 1) * step;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - ratio * (hi - lo);
  double d = lo + ratio * (hi - lo);
  double fc = ll(c);
  double fd = ll(d);
  while (hi - lo > opts.tolerance) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - ratio * (hi - lo);
      fc = ll(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + ratio * (hi - lo);
      fd = ll(d);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_ll = ll(refined);

  EtaEstimate est;
  if (refined_ll > best_ll) {
    est.eta = refined;
    est.loglik = refined_ll;
  } else {
    est.eta = best * step;
    est.loglik = best_ll;
  }
  est.tau2 = profile_tau2(s, z, est.eta);
  return est;
}

}  // namespace plmm
