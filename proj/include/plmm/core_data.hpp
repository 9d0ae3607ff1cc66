#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "plmm/error.hpp"
#include "plmm/types.hpp"

namespace plmm {

/// Raw column variance at or below this value marks a feature as inactive.
inline constexpr double kDefaultVarianceThreshold = 1e-10;

struct Dataset {
  Matrix X;  // n x p, rows are observations
  Vector y;
  std::vector<std::string> feature_names;
  std::vector<std::string> row_ids;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

/// Column-standardized design with the parameters that produced it.
///
/// Scales use the divide-by-n convention, so every active column satisfies
/// x'x = n. Inactive columns are stored as zeros and keep their raw
/// standard deviation in `scales`.
struct StandardizedMatrix {
  Matrix values;
  Vector centers;
  Vector scales;
  Mask active;

  Index n_active() const { return count_active(active); }
};

/// Reads a delimited text file with a header row. `outcome_column` is pulled
/// out as y; every other column becomes a feature, in file order.
/// An optional `id_column` supplies row labels instead of 1..n.
Dataset load_dataset(const std::filesystem::path& path, const std::string& outcome_column,
                     char delimiter = ',', const std::string& id_column = "");

/// Writes `data` so that load_dataset reproduces X and y bit for bit.
void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  const std::string& outcome_column = "y", char delimiter = ',');

/// Feature-only table (no outcome). Columns named in `drop` are skipped.
struct FeatureTable {
  Matrix X;
  std::vector<std::string> names;
};
FeatureTable load_features(const std::filesystem::path& path, char delimiter = ',',
                           const std::vector<std::string>& drop = {});

StandardizedMatrix standardize(const Eigen::Ref<const Matrix>& X,
                               double variance_threshold = kDefaultVarianceThreshold);

/// Applies training centers/scales verbatim to new rows. Inactive columns
/// come back as zeros.
template <typename Derived>
Matrix apply_standardization(const Eigen::MatrixBase<Derived>& X_new, const Vector& centers,
                             const Vector& scales, const Mask& active) {
  if (X_new.cols() != centers.size() || centers.size() != scales.size() ||
      scales.size() != active.size()) {
    throw InputError("apply_standardization: expected " + std::to_string(centers.size()) +
                     " columns, got " + std::to_string(X_new.cols()));
  }
  Matrix out = Matrix::Zero(X_new.rows(), X_new.cols());
  for (Index j = 0; j < X_new.cols(); ++j) {
    if (active[j]) out.col(j) = (X_new.col(j).array() - centers[j]) / scales[j];
  }
  return out;
}

inline Matrix apply_standardization(const Eigen::Ref<const Matrix>& X_new, const StandardizedMatrix& s) {
  return apply_standardization(X_new, s.centers, s.scales, s.active);
}

nlohmann::json standardization_to_json(const StandardizedMatrix& s);
/// Restores centers/scales/active; `values` is left empty.
StandardizedMatrix standardization_from_json(const nlohmann::json& j);

namespace json_io {
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Mask& m);
nlohmann::json to_json(const Matrix& m);  // array of rows
Vector vector_from_json(const nlohmann::json& j);
Mask mask_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);
}  // namespace json_io

}  // namespace plmm
