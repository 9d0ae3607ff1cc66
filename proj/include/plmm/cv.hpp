#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plmm/blup.hpp"
#include "plmm/lasso.hpp"

namespace plmm {

/// How much of the fitting pipeline is repeated inside each fold.
///   full:  standardize, decompose, estimate eta, rotate, fit
///   inner: rotate and fit; eigenvectors and eta come from the whole data
///   outer: fit only; rows of the once-rotated data are subset
enum class CvStrategy { full, inner, outer };

std::string to_string(CvStrategy s);
CvStrategy parse_strategy(const std::string& name);

struct FoldAssignment {
  std::vector<int> fold_of;  // 1..K per observation
  int K = 0;
  std::uint64_t seed = 0;

  Index n() const { return static_cast<Index>(fold_of.size()); }
  IndexList test_rows(int fold) const;
  IndexList train_rows(int fold) const;
};

/// Seeded uniform partition of n rows into K folds whose sizes differ by at
/// most one.
FoldAssignment assign_folds(Index n, int K, std::uint64_t seed);

struct LambdaSelection {
  Index min_index = 0;
  Index se_index = 0;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
};

/// lambda_min minimizes cve (ties go to the larger lambda); lambda_1se is the
/// largest lambda whose cve is within one standard error of the minimum.
LambdaSelection select_lambda(const Vector& cve, const Vector& cvse, const Vector& lambdas);

struct CvOptions {
  FitOptions fit;
  bool use_blup = true;
  BlupMode blup_mode = BlupMode::correct;  // incorrect is for the scaling demo only
  int threads = 1;
};

struct CvResult {
  CvStrategy strategy = CvStrategy::full;
  Vector lambdas;
  Vector cve;
  Vector cvse;
  LambdaSelection selection;
  Index nvar_at_min = 0;
  Index nvar_at_1se = 0;
  std::vector<Index> nvar;   // full-data model size per lambda
  Matrix fold_predictions;   // n x L held-out predictions
  Vector targets;            // what the predictions are scored against
  FoldAssignment folds;
};

/// Per-observation squared errors aggregated into (cve, cvse).
/// cvse is the sample standard deviation of the errors over sqrt(n).
void aggregate_errors(const Matrix& predictions, const Vector& targets, Vector& cve, Vector& cvse);

/// Held-out predictions for one fold. The lambda grid (and, for inner and
/// outer, the eigenvectors, eta and rotated data) come from `full`.
struct FoldFit {
  PlmmModel model;     // empty for outer
  Matrix coefficients; // p x L on the scale the fold was fit on
  Matrix predictions;  // |test| x L
  Vector targets;      // |test|
};

FoldFit fit_fold(const Dataset& data, CvStrategy strategy, const IndexList& train, const IndexList& test,
                 const PlmmFit& full, const CvOptions& opts);

/// Cross-validates on a shared lambda grid taken from the whole-data fit.
CvResult cross_validate(const Dataset& data, CvStrategy strategy, const FoldAssignment& folds,
                        const PlmmFit& full, const CvOptions& opts = {});

/// Convenience overload: fits the whole data first.
CvResult cross_validate(const Dataset& data, CvStrategy strategy, int K, std::uint64_t seed,
                        const CvOptions& opts = {});

}  // namespace plmm
