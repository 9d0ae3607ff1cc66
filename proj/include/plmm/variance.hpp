#pragma once

#include "plmm/decomposition.hpp"

namespace plmm {

struct EtaEstimate {
  double eta = 0.0;
  double loglik = 0.0;  // profile log-likelihood at eta
  double tau2 = 0.0;    // profiled total variance sigma2_s + sigma2_e
};

struct EtaOptions {
  int grid_size = 100;
  double upper = kEtaMax;
  double tolerance = 1e-4;  // golden-section bracket width
};

/// Null-model profile log-likelihood of y ~ N(0, tau2 (eta K + (1 - eta) I))
/// with tau2 profiled out. `z` is U'y, `s` the eigenvalues of K.
double profile_loglik(const Vector& s, const Vector& z, double eta);

/// tau2 maximizing the likelihood at fixed eta: mean of z_i^2 / d_i(eta).
double profile_tau2(const Vector& s, const Vector& z, double eta);

/// ML estimate of eta under beta = 0. Grid search, then golden-section
/// refinement inside the bracket around the best grid point. Grid ties go to
/// the smaller eta.
EtaEstimate estimate_eta(const Spectrum& spectrum, const Vector& y_centered, const EtaOptions& opts = {});

}  // namespace plmm
