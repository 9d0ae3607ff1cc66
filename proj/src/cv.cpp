#include "plmm/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "plmm/parallel.hpp"

namespace plmm {

std::string to_string(CvStrategy s) {
  switch (s) {
    case CvStrategy::full: return "full";
    case CvStrategy::inner: return "inner";
    case CvStrategy::outer: return "outer";
  }
  return "unknown";
}

CvStrategy parse_strategy(const std::string& name) {
  if (name == "full") return CvStrategy::full;
  if (name == "inner") return CvStrategy::inner;
  if (name == "outer") return CvStrategy::outer;
  throw InputError("unknown CV strategy '" + name + "' (expected full, inner or outer)");
}

IndexList FoldAssignment::test_rows(int fold) const {
  IndexList rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

IndexList FoldAssignment::train_rows(int fold) const {
  IndexList rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

FoldAssignment assign_folds(Index n, int K, std::uint64_t seed) {
  if (K < 2 || K > n) {
    throw InputError("assign_folds: K = " + std::to_string(K) + " must be in [2, " + std::to_string(n) + "]");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment f;
  f.K = K;
  f.seed = seed;
  f.fold_of.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    f.fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(K)) + 1;
  }
  return f;
}

LambdaSelection select_lambda(const Vector& cve, const Vector& cvse, const Vector& lambdas) {
  if (cve.size() == 0 || cve.size() != cvse.size() || cve.size() != lambdas.size()) {
    throw InputError("select_lambda: cve, cvse and lambdas must be nonempty and aligned");
  }
  LambdaSelection sel;
  for (Index l = 1; l < cve.size(); ++l) {
    if (cve[l] < cve[sel.min_index]) sel.min_index = l;
  }
  const double threshold = cve[sel.min_index] + cvse[sel.min_index];
  sel.se_index = sel.min_index;
  for (Index l = 0; l < cve.size(); ++l) {
    if (cve[l] <= threshold && lambdas[l] > lambdas[sel.se_index]) sel.se_index = l;
  }
  sel.lambda_min = lambdas[sel.min_index];
  sel.lambda_1se = lambdas[sel.se_index];
  return sel;
}

void aggregate_errors(const Matrix& predictions, const Vector& targets, Vector& cve, Vector& cvse) {
  const Index n = predictions.rows();
  const auto dn = static_cast<double>(n);
  cve.resize(predictions.cols());
  cvse.resize(predictions.cols());
  for (Index l = 0; l < predictions.cols(); ++l) {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double e = targets[i] - predictions(i, l);
      sum += e * e;
    }
    cve[l] = sum / dn;
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double e = targets[i] - predictions(i, l);
      ss += (e * e - cve[l]) * (e * e - cve[l]);
    }
    cvse[l] = std::sqrt(ss / (dn - 1.0) / dn);
  }
}

namespace {

FoldFit fit_full_fold(const Dataset& data, const IndexList& train, const IndexList& test, const PlmmFit& full,
                      const CvOptions& opts) {
  FitOptions fo = opts.fit;
  fo.lambdas = full.model.lambdas;
  const Matrix X_train = select_rows(data.X, train);
  const Vector y_train = select_entries(data.y, train);
  const Matrix X_test = select_rows(data.X, test);

  FoldFit out;
  out.model = fit_plmm(X_train, y_train, fo).model;
  out.coefficients = out.model.beta;
  out.targets = select_entries(data.y, test);
  if (!opts.use_blup) {
    out.predictions = predict_linear_path(out.model, X_test);
  } else if (opts.blup_mode == BlupMode::incorrect) {
    FullDataContext ctx{&full.standardized, train, test};
    out.predictions = predict_blup_path(out.model, X_test, BlupMode::incorrect, &ctx);
  } else {
    out.predictions = predict_blup_path(out.model, X_test);
  }
  return out;
}

FoldFit fit_inner_fold(const Dataset& data, const IndexList& train, const IndexList& test, const PlmmFit& full,
                       const CvOptions& opts) {
  const Matrix X_train = select_rows(data.X, train);
  const Vector y_train = select_entries(data.y, train);
  const double y_mean = y_train.mean();
  const Vector y_centered = y_train.array() - y_mean;

  const StandardizedMatrix Xstd = standardize(X_train, opts.fit.variance_threshold);
  const Preconditioner pre = restrict_rows(full.preconditioner, train);
  const RotatedData rot = rotate(pre, Xstd, y_centered, opts.fit.variance_threshold);
  LambdaPath path;
  path.lambdas = full.model.lambdas;

  FoldFit out;
  out.model = fit_path(rot, path, y_mean, Xstd, y_centered, opts.fit.solver);
  out.model.eta = full.model.eta;
  out.coefficients = out.model.beta;
  out.targets = select_entries(data.y, test);
  const Matrix X_test = select_rows(data.X, test);
  out.predictions = opts.use_blup ? predict_blup_path(out.model, X_test) : predict_linear_path(out.model, X_test);
  return out;
}

FoldFit fit_outer_fold(const IndexList& train, const IndexList& test, const PlmmFit& full, const CvOptions& opts) {
  const RotatedData& rot = full.rotated;
  const Matrix X_train = select_rows(rot.X, train);
  const Vector y_train = select_entries(rot.y, train);
  StandardizedMatrix s = standardize(X_train, opts.fit.variance_threshold);
  s.active = s.active && rot.active;

  Vector pf = Vector::Ones(X_train.cols());
  for (Index j = 0; j < pf.size(); ++j) {
    if (!s.active[j]) {
      pf[j] = kExcluded;
      s.values.col(j).setZero();
    }
  }
  const double y_mean = y_train.mean();
  const Vector y_centered = y_train.array() - y_mean;

  FoldFit out;
  out.coefficients = lasso_path(s.values, y_centered, full.model.lambdas, pf, opts.fit.solver);
  const Matrix X_test = apply_standardization(select_rows(rot.X, test), s.centers, s.scales, s.active);
  out.predictions = (X_test * out.coefficients).array() + y_mean;
  out.targets = select_entries(rot.y, test);
  return out;
}

}  // namespace

FoldFit fit_fold(const Dataset& data, CvStrategy strategy, const IndexList& train, const IndexList& test,
                 const PlmmFit& full, const CvOptions& opts) {
  if (train.size() < 2) throw InputError("fold has fewer than 2 training rows");
  switch (strategy) {
    case CvStrategy::full: return fit_full_fold(data, train, test, full, opts);
    case CvStrategy::inner: return fit_inner_fold(data, train, test, full, opts);
    case CvStrategy::outer: return fit_outer_fold(train, test, full, opts);
  }
  throw InputError("fit_fold: unknown strategy");
}

CvResult cross_validate(const Dataset& data, CvStrategy strategy, const FoldAssignment& folds,
                        const PlmmFit& full, const CvOptions& opts) {
  if (folds.n() != data.n()) throw InputError("cross_validate: fold assignment does not match data size");
  const Index L = full.model.n_lambda();

  CvResult res;
  res.strategy = strategy;
  res.folds = folds;
  res.lambdas = full.model.lambdas;
  res.fold_predictions = Matrix::Zero(data.n(), L);
  res.targets = Vector::Zero(data.n());

  std::vector<FoldFit> fits(static_cast<std::size_t>(folds.K));
  std::vector<IndexList> tests(static_cast<std::size_t>(folds.K));
  parallel_for(static_cast<std::size_t>(folds.K), opts.threads, [&](std::size_t k) {
    const int fold = static_cast<int>(k) + 1;
    tests[k] = folds.test_rows(fold);
    try {
      fits[k] = fit_fold(data, strategy, folds.train_rows(fold), tests[k], full, opts);
    } catch (const Error& e) {
      rethrow_with_context(e, to_string(strategy) + " CV, fold " + std::to_string(fold) + ": ");
    }
  });
  for (std::size_t k = 0; k < fits.size(); ++k) {
    for (std::size_t i = 0; i < tests[k].size(); ++i) {
      res.fold_predictions.row(tests[k][i]) = fits[k].predictions.row(static_cast<Index>(i));
      res.targets[tests[k][i]] = fits[k].targets[static_cast<Index>(i)];
    }
  }

  aggregate_errors(res.fold_predictions, res.targets, res.cve, res.cvse);
  res.selection = select_lambda(res.cve, res.cvse, res.lambdas);
  res.nvar.resize(static_cast<std::size_t>(L));
  for (Index l = 0; l < L; ++l) res.nvar[static_cast<std::size_t>(l)] = full.model.nvar(l);
  res.nvar_at_min = full.model.nvar(res.selection.min_index);
  res.nvar_at_1se = full.model.nvar(res.selection.se_index);
  return res;
}

CvResult cross_validate(const Dataset& data, CvStrategy strategy, int K, std::uint64_t seed, const CvOptions& opts) {
  const PlmmFit full = fit_plmm(data.X, data.y, opts.fit);
  return cross_validate(data, strategy, assign_folds(data.n(), K, seed), full, opts);
}

}  // namespace plmm
