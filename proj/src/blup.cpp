#include "plmm/blup.hpp"

#include <Eigen/Cholesky>

namespace plmm {

namespace {

Matrix active_columns(const Matrix& X, const Mask& active) {
  Matrix out(X.rows(), count_active(active));
  for (Index j = 0, k = 0; j < X.cols(); ++j) {
    if (active[j]) out.col(k++) = X.col(j);
  }
  return out;
}

}  // namespace

BlupComponents blup_components(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw, BlupMode mode,
                               const FullDataContext* ctx, const ObservationOverlap& overlap) {
  if (X2_raw.cols() != model.p()) {
    throw InputError("predict_blup: expected " + std::to_string(model.p()) + " columns, got " +
                     std::to_string(X2_raw.cols()));
  }
  const double eta = model.eta;
  const Index n1 = model.n_train();
  const Index n2 = X2_raw.rows();
  BlupComponents c;
  c.mode = mode;

  if (mode == BlupMode::correct) {
    const Mask& act = model.train_active;
    const auto p = static_cast<double>(count_active(act));
    const Matrix X1 = active_columns(model.train_X_std, act);
    const Matrix X2 = active_columns(
        apply_standardization(X2_raw, model.train_centers, model.train_scales, model.train_active), act);
    c.S11 = (eta / p) * (X1 * X1.transpose());
    c.S21 = (eta / p) * (X2 * X1.transpose());
  } else {
    if (ctx == nullptr || ctx->full_std == nullptr) {
      throw InputError("predict_blup: incorrect mode needs the full-data context");
    }
    if (static_cast<Index>(ctx->train_rows.size()) != n1 || static_cast<Index>(ctx->new_rows.size()) != n2) {
      throw InputError("predict_blup: full-data context row sets do not match the model and new data");
    }
    const Mask& act = ctx->full_std->active;
    const auto p = static_cast<double>(count_active(act));
    const Matrix Xf = active_columns(ctx->full_std->values, act);
    const Matrix X1 = select_rows(Xf, ctx->train_rows);
    const Matrix X2 = select_rows(Xf, ctx->new_rows);
    c.S11 = (eta / p) * (X1 * X1.transpose());
    c.S21 = (eta / p) * (X2 * X1.transpose());
  }
  c.S11.diagonal().array() += 1.0 - eta;
  for (const auto& [i2, i1] : overlap) {
    if (i2 < 0 || i2 >= n2 || i1 < 0 || i1 >= n1) throw InputError("predict_blup: overlap index out of range");
    c.S21(i2, i1) += 1.0 - eta;
  }
  return c;
}

Matrix predict_blup_path(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw, BlupMode mode,
                         const FullDataContext* ctx, const ObservationOverlap& overlap) {
  const BlupComponents c = blup_components(model, X2_raw, mode, ctx, overlap);
  Eigen::LLT<Matrix> llt(c.S11);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("predict_blup: S11 is not positive definite (eta = " + std::to_string(model.eta) + ")");
  }
  Matrix out = predict_linear_path(model, X2_raw);
  out.noalias() += c.S21 * llt.solve(model.residuals);
  return out;
}

Vector predict_blup(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw, Index lambda_index,
                    BlupMode mode, const FullDataContext* ctx, const ObservationOverlap& overlap) {
  if (lambda_index < 0 || lambda_index >= model.n_lambda()) {
    throw InputError("predict_blup: lambda index " + std::to_string(lambda_index) + " out of range");
  }
  const BlupComponents c = blup_components(model, X2_raw, mode, ctx, overlap);
  Eigen::LLT<Matrix> llt(c.S11);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("predict_blup: S11 is not positive definite (eta = " + std::to_string(model.eta) + ")");
  }
  Vector out = predict_linear(model, X2_raw, lambda_index);
  out.noalias() += c.S21 * llt.solve(model.residuals.col(lambda_index));
  return out;
}

ObservationOverlap self_overlap(Index n) {
  ObservationOverlap o;
  o.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) o.emplace_back(i, i);
  return o;
}

}  // namespace plmm
