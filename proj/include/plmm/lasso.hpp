#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "plmm/core_data.hpp"
#include "plmm/decomposition.hpp"
#include "plmm/rotation.hpp"
#include "plmm/variance.hpp"

namespace plmm {

struct LambdaPath {
  Vector lambdas;  // strictly descending, lambdas[0] = lambda_max
  double min_ratio = 0.0;

  Index size() const { return lambdas.size(); }
};

/// Default min_ratio: 0.001 when n > p, else 0.05.
double default_min_ratio(Index n, Index p);

/// Geometric grid from lambda_max = max_j |x_j'y| / n over active columns
/// down to lambda_max * min_ratio.
LambdaPath make_lambda_path(const RotatedData& rot, int n_lambda = 100,
                            std::optional<double> min_ratio = std::nullopt);

struct SolverOptions {
  double tolerance = 1e-7;  // max coefficient change per sweep, standardized units
  int max_iter = 100000;    // sweeps per lambda
  /// Called after every sweep with (lambda index, penalized objective).
  std::function<void(Index, double)> on_sweep;
};

inline constexpr double kUnpenalized = 0.0;
inline const double kExcluded = std::numeric_limits<double>::infinity();

/// Lasso path by cyclic coordinate descent with warm starts and active-set
/// cycling. Minimizes ||y - X b||^2 / (2n) + lambda * sum_j pf_j |b_j| for
/// each lambda. Columns with an infinite penalty factor never move off zero.
/// Returns a p x L coefficient matrix.
Matrix lasso_path(const Eigen::Ref<const Matrix>& X, const Vector& y, const Vector& lambdas,
                  const Vector& penalty_factor, const SolverOptions& opts = {});

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// Fitted penalized linear mixed model.
struct PlmmModel {
  double beta0 = 0.0;        // mean of training y
  Vector lambdas;
  Matrix beta;               // p x L, original feature scale
  Matrix beta_std;           // p x L, rotated-standardized scale
  Vector intercepts;         // original-scale intercept per lambda: beta0 - centers' beta
  double eta = 0.0;
  Vector train_centers;
  Vector train_scales;
  Mask train_active;         // raw-stage screen
  Vector rot_centers;
  Vector rot_scales;
  Mask active;               // raw and rotated screens combined
  Matrix residuals;          // n x L, y - intercept - X beta
  Matrix train_X_std;        // standardized training design, kept for BLUP
  std::vector<std::string> feature_names;
  std::uint64_t data_hash = 0;

  Index n_lambda() const { return lambdas.size(); }
  Index p() const { return beta.rows(); }
  Index n_train() const { return residuals.rows(); }
  Index nvar(Index l) const;
};

/// Fits the path on rotated data. The intercept is mean(y) and no intercept
/// column enters the design. Coefficients are mapped back through both
/// standardization stages.
PlmmModel fit_path(const RotatedData& rot, const LambdaPath& path, double raw_y_mean,
                   const StandardizedMatrix& std_info, const Vector& y_centered,
                   const SolverOptions& opts = {});

/// beta0-consistent linear predictor on the original scale.
Vector predict_linear(const PlmmModel& model, const Eigen::Ref<const Matrix>& X_new, Index lambda_index);
Matrix predict_linear_path(const PlmmModel& model, const Eigen::Ref<const Matrix>& X_new);

struct FitOptions {
  std::optional<double> eta;  // skip estimation when set
  EtaOptions eta_options;
  int n_lambda = 100;
  std::optional<double> min_ratio;
  std::optional<Vector> lambdas;  // overrides the computed grid
  double variance_threshold = kDefaultVarianceThreshold;
  SolverOptions solver;
};

/// Every intermediate of a full-data fit.
struct PlmmFit {
  StandardizedMatrix standardized;
  Spectrum spectrum;
  EtaEstimate eta;
  Preconditioner preconditioner;
  RotatedData rotated;
  Vector y_centered;
  PlmmModel model;
};

/// standardize -> kinship -> eigendecompose -> estimate eta -> rotate -> fit.
PlmmFit fit_plmm(const Eigen::Ref<const Matrix>& X, const Vector& y, const FitOptions& opts = {});

nlohmann::json model_to_json(const PlmmModel& model);
PlmmModel model_from_json(const nlohmann::json& j);

}  // namespace plmm
