#pragma once

#include "plmm/core_data.hpp"
#include "plmm/decomposition.hpp"

namespace plmm {

/// Preconditioned data, with the rotated design re-standardized.
struct RotatedData {
  Matrix X;  // re-standardized rotated design
  Vector y;  // rotated outcome, not rescaled
  Vector centers;
  Vector scales;
  Mask active;  // false if excluded at the raw or the rotated stage
};

/// Whitens (Xstd, y) with `pre`, then re-standardizes the rotated design.
/// Columns whose rotated variance falls to `variance_threshold` or below are
/// screened out. The rows of `Xstd` must match the rows of `pre.U`.
RotatedData rotate(const Preconditioner& pre, const StandardizedMatrix& Xstd, const Vector& y_centered,
                   double variance_threshold = kDefaultVarianceThreshold);

}  // namespace plmm
