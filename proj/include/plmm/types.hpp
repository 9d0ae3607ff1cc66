#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace plmm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-feature inclusion flags. `false` means the feature carries an
/// infinite penalty and never enters a fit.
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

using IndexList = std::vector<Index>;

inline Index count_active(const Mask& mask) { return mask.count(); }

/// Rows of `m` selected by `rows`, in the given order.
template <typename Derived>
Matrix select_rows(const Eigen::MatrixBase<Derived>& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

template <typename Derived>
Vector select_entries(const Eigen::MatrixBase<Derived>& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

/// 64-bit FNV-1a over the raw bytes of a dense matrix plus its shape.
/// Used to tie cached artifacts to the exact data they came from.
template <typename Derived>
std::uint64_t content_hash(const Eigen::DenseBase<Derived>& m, std::uint64_t h = 0xcbf29ce484222325ULL) {
  auto mix = [&h](const unsigned char* p, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t shape[2] = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
  mix(reinterpret_cast<const unsigned char*>(shape), sizeof(shape));
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const double v = static_cast<double>(m(i, j));
      mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
    }
  }
  return h;
}

}  // namespace plmm
