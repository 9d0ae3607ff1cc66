#pragma once

#include <cstdint>
#include <filesystem>

#include "plmm/core_data.hpp"
#include "plmm/types.hpp"

namespace plmm {

/// Upper bound on eta. Keeps (1 - eta)^(-1/2) finite for null eigenvalues.
inline constexpr double kEtaMax = 0.99;

/// Eigenvalues in (-kEigenClamp, 0) are treated as round-off and set to 0.
inline constexpr double kEigenClamp = 1e-8;

/// Realized relationship matrix (1/p) X X' over active standardized columns.
struct Kinship {
  Matrix K;
};

/// Full n x n symmetric eigendecomposition, eigenvalues descending.
struct Spectrum {
  Matrix U;
  Vector s;

  Index n() const { return s.size(); }
};

/// Whitening operator for eta*K + (1 - eta)*I built from a spectrum.
///
/// The operator is the symmetric inverse square root U diag(w) U'. `U` may
/// be a row subset of the full eigenvector matrix (see restrict_rows), in
/// which case the operator acts on that subset of observations.
struct Preconditioner {
  Matrix U;
  Vector w;  // (eta * s_i + 1 - eta)^(-1/2)
  double eta = 0.0;

  Matrix matrix() const { return U * w.asDiagonal() * U.transpose(); }

  template <typename Derived>
  Matrix apply(const Eigen::MatrixBase<Derived>& x) const {
    return U * (w.asDiagonal() * (U.transpose() * x));
  }
};

Kinship compute_kinship(const StandardizedMatrix& Xstd);

/// Always the full n x n decomposition of K, never a thin SVD of X.
Spectrum eigendecompose(const Kinship& kinship);

Preconditioner build_preconditioner(const Spectrum& spectrum, double eta, double eta_max = kEtaMax);

/// Keeps the eigenvector rows of `rows` and the full-data weights. This is
/// the shortcut preconditioner used by inner cross-validation.
Preconditioner restrict_rows(const Preconditioner& pre, std::span<const Index> rows);

/// Spectrum cache. `data_hash` ties the file to the standardized matrix it
/// was computed from; loading with a different hash throws.
void save_spectrum(const Spectrum& spectrum, std::uint64_t data_hash, const std::filesystem::path& path);
Spectrum load_spectrum(const std::filesystem::path& path, std::uint64_t expected_hash);

}  // namespace plmm
