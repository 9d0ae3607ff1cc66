#include "plmm/rotation.hpp"

namespace plmm {

RotatedData rotate(const Preconditioner& pre, const StandardizedMatrix& Xstd, const Vector& y_centered,
                   double variance_threshold) {
  const Index n = pre.U.rows();
  if (Xstd.values.rows() != n || y_centered.size() != n) {
    throw InputError("rotate: preconditioner acts on " + std::to_string(n) + " rows, data has " +
                     std::to_string(Xstd.values.rows()) + " (y: " + std::to_string(y_centered.size()) + ")");
  }
  const Matrix M = pre.matrix();
  const Matrix Xrot = M * Xstd.values;

  StandardizedMatrix restd = standardize(Xrot, variance_threshold);
  RotatedData out;
  out.y = M * y_centered;
  out.active = Xstd.active && restd.active;
  for (Index j = 0; j < restd.values.cols(); ++j) {
    if (!out.active[j]) restd.values.col(j).setZero();
  }
  out.X = std::move(restd.values);
  out.centers = std::move(restd.centers);
  out.scales = std::move(restd.scales);
  return out;
}

}  // namespace plmm
