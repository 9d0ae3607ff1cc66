#pragma once

#include <optional>

#include "plmm/lasso.hpp"

namespace plmm {

enum class BlupMode {
  correct,    // new rows standardized with the training centers/scales
  incorrect,  // covariance blocks subset from a whole-dataset standardization
};

/// What the incorrect mode needs: the standardization of the whole dataset
/// and where the training and new rows sit inside it.
struct FullDataContext {
  const StandardizedMatrix* full_std = nullptr;
  IndexList train_rows;
  IndexList new_rows;
};

/// Covariance blocks used by the BLUP correction.
///   S11 = (eta/p) X1 X1' + (1 - eta) I
///   S21 = (eta/p) X2 X1'   (+ (1 - eta) at positions in `same_observation`)
struct BlupComponents {
  Matrix S11;
  Matrix S21;
  BlupMode mode = BlupMode::correct;
};

/// Pairs (new row, training row) that refer to the same observation rather
/// than a fresh draw with equal features. Those entries of S21 pick up the
/// noise covariance, so predicting the training rows returns y exactly.
using ObservationOverlap = std::vector<std::pair<Index, Index>>;

BlupComponents blup_components(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw,
                               BlupMode mode = BlupMode::correct, const FullDataContext* ctx = nullptr,
                               const ObservationOverlap& overlap = {});

/// Linear predictor plus S21 S11^{-1} (training residuals) at one lambda.
Vector predict_blup(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw, Index lambda_index,
                    BlupMode mode = BlupMode::correct, const FullDataContext* ctx = nullptr,
                    const ObservationOverlap& overlap = {});

/// Same for every lambda at once; S11 is factored a single time. m x L.
Matrix predict_blup_path(const PlmmModel& model, const Eigen::Ref<const Matrix>& X2_raw,
                         BlupMode mode = BlupMode::correct, const FullDataContext* ctx = nullptr,
                         const ObservationOverlap& overlap = {});

/// Overlap for predicting exactly the training rows, in training order.
ObservationOverlap self_overlap(Index n);

}  // namespace plmm
