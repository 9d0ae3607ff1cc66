#include "plmm/lasso.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace plmm {

double default_min_ratio(Index n, Index p) { return n > p ? 0.001 : 0.05; }

LambdaPath make_lambda_path(const RotatedData& rot, int n_lambda, std::optional<double> min_ratio) {
  if (n_lambda < 1) throw InputError("make_lambda_path: n_lambda must be >= 1");
  const Index n = rot.X.rows();
  const Index p_active = count_active(rot.active);
  if (p_active == 0) throw InputError("make_lambda_path: no active features");
  const double ratio = min_ratio.value_or(default_min_ratio(n, p_active));
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("make_lambda_path: min_ratio must be in (0, 1)");

  // Same arithmetic as the solver's first coordinate update, so the solution at
  // lambda_max is exactly zero.
  double lambda_max = 0.0;
  for (Index j = 0; j < rot.X.cols(); ++j) {
    if (rot.active[j]) lambda_max = std::max(lambda_max, std::abs(rot.X.col(j).dot(rot.y) / static_cast<double>(n)));
  }
  if (!(lambda_max > 0.0)) {
    throw InputError("make_lambda_path: lambda_max is 0 (outcome orthogonal to every feature)");
  }

  LambdaPath path;
  path.min_ratio = ratio;
  path.lambdas.resize(n_lambda);
  if (n_lambda == 1) {
    path.lambdas[0] = lambda_max;
    return path;
  }
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * ratio);
  for (int l = 0; l < n_lambda; ++l) {
    path.lambdas[l] = std::exp(log_max + (log_min - log_max) * l / (n_lambda - 1));
  }
  path.lambdas[0] = lambda_max;
  return path;
}

namespace {

class CoordinateDescent {
 public:
  CoordinateDescent(const Eigen::Ref<const Matrix>& X, const Vector& y, const Vector& pf, const SolverOptions& opts)
      : X_(X), pf_(pf), opts_(opts), n_(static_cast<double>(X.rows())) {
    col_sq_ = X.colwise().squaredNorm().transpose() / n_;
    beta_ = Vector::Zero(X.cols());
    resid_ = y;
    in_active_.assign(static_cast<std::size_t>(X.cols()), false);
    for (Index j = 0; j < X.cols(); ++j) {
      if (eligible(j) && pf_[j] == 0.0) add_active(j);
    }
  }

  void solve(double lambda, Index lambda_index) {
    int sweeps = 0;
    auto count = [&] {
      if (++sweeps > opts_.max_iter) {
        std::ostringstream msg;
        msg << "coordinate descent did not converge within " << opts_.max_iter << " sweeps at lambda[" << lambda_index
            << "] = " << lambda;
        throw NumericalError(msg.str());
      }
    };
    while (true) {
      count();
      const double full_change = full_sweep(lambda);
      report(lambda, lambda_index);
      if (full_change < opts_.tolerance) return;
      while (true) {
        count();
        const double change = active_sweep(lambda);
        report(lambda, lambda_index);
        if (change < opts_.tolerance) break;
      }
    }
  }

  const Vector& beta() const { return beta_; }

 private:
  bool eligible(Index j) const { return std::isfinite(pf_[j]) && col_sq_[j] > 0.0; }

  void add_active(Index j) {
    if (!in_active_[static_cast<std::size_t>(j)]) {
      in_active_[static_cast<std::size_t>(j)] = true;
      active_.push_back(j);
    }
  }

  double update(Index j, double lambda) {
    const double old = beta_[j];
    const double z = X_.col(j).dot(resid_) / n_ + col_sq_[j] * old;
    const double fresh = soft_threshold(z, lambda * pf_[j]) / col_sq_[j];
    const double delta = fresh - old;
    if (delta != 0.0) {
      resid_.noalias() -= delta * X_.col(j);
      beta_[j] = fresh;
    }
    return std::abs(delta) * std::sqrt(col_sq_[j]);
  }

  double full_sweep(double lambda) {
    double max_change = 0.0;
    for (Index j = 0; j < X_.cols(); ++j) {
      if (!eligible(j)) continue;
      max_change = std::max(max_change, update(j, lambda));
      if (beta_[j] != 0.0) add_active(j);
    }
    return max_change;
  }

  double active_sweep(double lambda) {
    double max_change = 0.0;
    for (Index j : active_) max_change = std::max(max_change, update(j, lambda));
    return max_change;
  }

  void report(double lambda, Index lambda_index) const {
    if (!opts_.on_sweep) return;
    double penalty = 0.0;
    for (Index j = 0; j < beta_.size(); ++j) {
      if (beta_[j] != 0.0) penalty += pf_[j] * std::abs(beta_[j]);
    }
    opts_.on_sweep(lambda_index, resid_.squaredNorm() / (2.0 * n_) + lambda * penalty);
  }

  const Eigen::Ref<const Matrix>& X_;
  const Vector& pf_;
  const SolverOptions& opts_;
  double n_;
  Vector col_sq_;
  Vector beta_;
  Vector resid_;
  std::vector<bool> in_active_;
  std::vector<Index> active_;
};

}  // namespace

Matrix lasso_path(const Eigen::Ref<const Matrix>& X, const Vector& y, const Vector& lambdas,
                  const Vector& penalty_factor, const SolverOptions& opts) {
  if (X.rows() != y.size()) throw InputError("lasso_path: X and y have different row counts");
  if (penalty_factor.size() != X.cols()) throw InputError("lasso_path: penalty_factor length != number of columns");
  for (Index l = 1; l < lambdas.size(); ++l) {
    if (!(lambdas[l] < lambdas[l - 1])) throw InputError("lasso_path: lambdas must be strictly descending");
  }
  CoordinateDescent cd(X, y, penalty_factor, opts);
  Matrix betas(X.cols(), lambdas.size());
  for (Index l = 0; l < lambdas.size(); ++l) {
    cd.solve(lambdas[l], l);
    betas.col(l) = cd.beta();
  }
  return betas;
}

Index PlmmModel::nvar(Index l) const {
  return (beta.col(l).array() != 0.0).count();
}

PlmmModel fit_path(const RotatedData& rot, const LambdaPath& path, double raw_y_mean,
                   const StandardizedMatrix& std_info, const Vector& y_centered, const SolverOptions& opts) {
  const Index p = rot.X.cols();
  if (std_info.values.cols() != p || std_info.values.rows() != y_centered.size()) {
    throw InputError("fit_path: standardization info does not match rotated data");
  }
  Vector pf = Vector::Ones(p);
  for (Index j = 0; j < p; ++j) {
    if (!rot.active[j]) pf[j] = kExcluded;
  }

  PlmmModel m;
  m.beta0 = raw_y_mean;
  m.lambdas = path.lambdas;
  m.beta_std = lasso_path(rot.X, rot.y, path.lambdas, pf, opts);
  m.beta = Matrix::Zero(p, path.size());
  for (Index j = 0; j < p; ++j) {
    if (rot.active[j]) m.beta.row(j) = m.beta_std.row(j) / (rot.scales[j] * std_info.scales[j]);
  }
  m.intercepts = (raw_y_mean - (std_info.centers.transpose() * m.beta).array()).transpose();

  // Residuals on the raw scale; (X - centers) beta = values (scales .* beta).
  const Matrix scaled_beta = std_info.scales.asDiagonal() * m.beta;
  m.residuals = (-(std_info.values * scaled_beta)).colwise() + y_centered;

  m.train_centers = std_info.centers;
  m.train_scales = std_info.scales;
  m.train_active = std_info.active;
  m.rot_centers = rot.centers;
  m.rot_scales = rot.scales;
  m.active = rot.active;
  m.train_X_std = std_info.values;
  return m;
}

Vector predict_linear(const PlmmModel& model, const Eigen::Ref<const Matrix>& X_new, Index lambda_index) {
  if (lambda_index < 0 || lambda_index >= model.n_lambda()) {
    throw InputError("predict_linear: lambda index " + std::to_string(lambda_index) + " out of range [0, " +
                     std::to_string(model.n_lambda()) + ")");
  }
  if (X_new.cols() != model.p()) {
    throw InputError("predict_linear: expected " + std::to_string(model.p()) + " columns, got " +
                     std::to_string(X_new.cols()));
  }
  return (X_new * model.beta.col(lambda_index)).array() + model.intercepts[lambda_index];
}

Matrix predict_linear_path(const PlmmModel& model, const Eigen::Ref<const Matrix>& X_new) {
  if (X_new.cols() != model.p()) {
    throw InputError("predict_linear: expected " + std::to_string(model.p()) + " columns, got " +
                     std::to_string(X_new.cols()));
  }
  Matrix out = X_new * model.beta;
  out.rowwise() += model.intercepts.transpose();
  return out;
}

PlmmFit fit_plmm(const Eigen::Ref<const Matrix>& X, const Vector& y, const FitOptions& opts) {
  if (X.rows() != y.size()) throw InputError("fit_plmm: X has " + std::to_string(X.rows()) + " rows, y has " +
                                             std::to_string(y.size()));
  PlmmFit fit;
  fit.standardized = standardize(X, opts.variance_threshold);
  fit.spectrum = eigendecompose(compute_kinship(fit.standardized));
  const double y_mean = y.mean();
  fit.y_centered = y.array() - y_mean;

  if (opts.eta) {
    fit.eta.eta = *opts.eta;
    if (fit.y_centered.squaredNorm() > 0.0) {
      const Vector z = fit.spectrum.U.transpose() * fit.y_centered;
      fit.eta.loglik = profile_loglik(fit.spectrum.s, z, *opts.eta);
      fit.eta.tau2 = profile_tau2(fit.spectrum.s, z, *opts.eta);
    }
  } else {
    fit.eta = estimate_eta(fit.spectrum, fit.y_centered, opts.eta_options);
  }
  fit.preconditioner = build_preconditioner(fit.spectrum, fit.eta.eta);
  fit.rotated = rotate(fit.preconditioner, fit.standardized, fit.y_centered, opts.variance_threshold);

  LambdaPath path;
  if (opts.lambdas) {
    path.lambdas = *opts.lambdas;
    path.min_ratio = path.lambdas.size() > 0 ? path.lambdas[path.lambdas.size() - 1] / path.lambdas[0] : 0.0;
  } else {
    path = make_lambda_path(fit.rotated, opts.n_lambda, opts.min_ratio);
  }
  fit.model = fit_path(fit.rotated, path, y_mean, fit.standardized, fit.y_centered, opts.solver);
  fit.model.eta = fit.eta.eta;
  fit.model.data_hash = content_hash(y, content_hash(X));
  return fit;
}

nlohmann::json model_to_json(const PlmmModel& m) {
  nlohmann::json j;
  j["format"] = "plmm-model-v1";
  j["beta0"] = m.beta0;
  j["eta"] = m.eta;
  j["lambdas"] = json_io::to_json(m.lambdas);
  j["intercepts"] = json_io::to_json(m.intercepts);
  j["feature_names"] = m.feature_names;
  j["data_hash"] = m.data_hash;
  // beta_path[l] is the coefficient vector at lambdas[l]
  j["beta_path"] = json_io::to_json(Matrix(m.beta.transpose()));
  j["beta_std_path"] = json_io::to_json(Matrix(m.beta_std.transpose()));
  j["train_standardization"] = {{"centers", json_io::to_json(m.train_centers)},
                                {"scales", json_io::to_json(m.train_scales)},
                                {"active", json_io::to_json(m.train_active)}};
  j["rotated_standardization"] = {{"centers", json_io::to_json(m.rot_centers)},
                                  {"scales", json_io::to_json(m.rot_scales)},
                                  {"active", json_io::to_json(m.active)}};
  j["residuals_path"] = json_io::to_json(Matrix(m.residuals.transpose()));
  j["train_X_std"] = json_io::to_json(m.train_X_std);
  return j;
}

PlmmModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "plmm-model-v1") throw InputError("not a plmm model file");
  PlmmModel m;
  m.beta0 = j.at("beta0").get<double>();
  m.eta = j.at("eta").get<double>();
  m.lambdas = json_io::vector_from_json(j.at("lambdas"));
  m.intercepts = json_io::vector_from_json(j.at("intercepts"));
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.data_hash = j.at("data_hash").get<std::uint64_t>();
  m.beta = json_io::matrix_from_json(j.at("beta_path")).transpose();
  m.beta_std = json_io::matrix_from_json(j.at("beta_std_path")).transpose();
  const auto& ts = j.at("train_standardization");
  m.train_centers = json_io::vector_from_json(ts.at("centers"));
  m.train_scales = json_io::vector_from_json(ts.at("scales"));
  m.train_active = json_io::mask_from_json(ts.at("active"));
  const auto& rs = j.at("rotated_standardization");
  m.rot_centers = json_io::vector_from_json(rs.at("centers"));
  m.rot_scales = json_io::vector_from_json(rs.at("scales"));
  m.active = json_io::mask_from_json(rs.at("active"));
  m.residuals = json_io::matrix_from_json(j.at("residuals_path")).transpose();
  m.train_X_std = json_io::matrix_from_json(j.at("train_X_std"));

  const Index L = m.lambdas.size();
  const Index p = static_cast<Index>(m.feature_names.size());
  if (m.beta.rows() != p || m.beta.cols() != L || m.intercepts.size() != L || m.residuals.cols() != L ||
      m.train_centers.size() != p || m.train_X_std.cols() != p || m.train_X_std.rows() != m.residuals.rows()) {
    throw InputError("model file has inconsistent dimensions");
  }
  return m;
}

}  // namespace plmm
