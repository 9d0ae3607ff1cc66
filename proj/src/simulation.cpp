#include "plmm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "plmm/parallel.hpp"

namespace plmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector equally_spaced(double magnitude, int B) {
  if (B == 1) return Vector::Constant(1, -magnitude);
  return Vector::LinSpaced(B, -magnitude, magnitude);
}

Matrix indicators(const std::vector<int>& batch, int B) {
  Matrix Z = Matrix::Zero(static_cast<Index>(batch.size()), B);
  for (std::size_t i = 0; i < batch.size(); ++i) Z(static_cast<Index>(i), batch[i]) = 1.0;
  return Z;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Dataset SimDataset::to_dataset() const {
  Dataset d;
  d.X = X;
  d.y = y;
  for (Index j = 0; j < X.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  for (Index i = 0; i < X.rows(); ++i) d.row_ids.push_back(std::to_string(i + 1));
  return d;
}

SimDataset generate_correlated_data(const GeneratorConfig& cfg, std::uint64_t seed) {
  if (cfg.B < 1 || cfg.n % cfg.B != 0) {
    throw InputError("generate_correlated_data: B = " + std::to_string(cfg.B) + " must divide n = " +
                     std::to_string(cfg.n));
  }
  if (cfg.s > cfg.p || cfg.s < 0) throw InputError("generate_correlated_data: s must be in [0, p]");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&] { return normal(rng); };

  SimDataset d;
  d.seed = seed;
  const Matrix mu = Matrix::NullaryExpr(cfg.B, cfg.p, draw);
  const Index block = cfg.n / cfg.B;
  d.batch_id.resize(static_cast<std::size_t>(cfg.n));
  for (Index i = 0; i < cfg.n; ++i) d.batch_id[static_cast<std::size_t>(i)] = static_cast<int>(i / block);
  d.X = Matrix::NullaryExpr(cfg.n, cfg.p, draw);
  for (Index i = 0; i < cfg.n; ++i) d.X.row(i) += mu.row(d.batch_id[static_cast<std::size_t>(i)]);

  d.beta_true = Vector::Zero(cfg.p);
  d.beta_true.head(cfg.s).setConstant(cfg.beta);
  d.gamma = equally_spaced(cfg.gamma, cfg.B);
  d.Z = indicators(d.batch_id, cfg.B);
  const Vector eps = Vector::NullaryExpr(cfg.n, draw);
  d.y = d.X * d.beta_true + d.Z * d.gamma + eps;
  return d;
}

SimDataset inject_confounder(const Matrix& X, const ConfounderConfig& cfg, std::uint64_t seed) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (cfg.s > p || cfg.s < 0) throw InputError("inject_confounder: s must be in [0, p]");
  if (cfg.B < 1) throw InputError("inject_confounder: B must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  SimDataset d;
  d.seed = seed;
  d.X = X;

  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  d.batch_id.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.batch_id[static_cast<std::size_t>(rows[i])] = static_cast<int>(i % static_cast<std::size_t>(cfg.B));
  }

  std::vector<Index> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), Index{0});
  std::shuffle(features.begin(), features.end(), rng);
  d.beta_true = Vector::Zero(p);
  for (Index k = 0; k < cfg.s; ++k) d.beta_true[features[static_cast<std::size_t>(k)]] = cfg.beta_mag;

  d.gamma = equally_spaced(cfg.gamma_mag, cfg.B);
  d.Z = indicators(d.batch_id, cfg.B);
  const Vector eps = Vector::NullaryExpr(n, [&] { return normal(rng); });
  d.y = X * d.beta_true + d.Z * d.gamma + eps;
  return d;
}

SimMetrics compute_metrics(const Vector& beta_hat, const Vector& beta_true, const Vector& y_test,
                           const Vector& y_hat) {
  if (beta_hat.size() != beta_true.size()) throw InputError("compute_metrics: coefficient vectors differ in length");
  if (y_test.size() != y_hat.size()) throw InputError("compute_metrics: y_test and y_hat differ in length");
  const auto selected = (beta_hat.array() != 0.0).eval();
  const auto truth = (beta_true.array() != 0.0).eval();
  const Index n_sel = selected.count();
  const Index n_true = truth.count();
  const Index true_pos = (selected && truth).count();

  SimMetrics m;
  m.nvar = n_sel;
  m.tdr = n_true > 0 ? static_cast<double>(true_pos) / static_cast<double>(n_true) : 0.0;
  m.fdr = n_sel > 0 ? static_cast<double>(n_sel - true_pos) / static_cast<double>(n_sel) : 0.0;
  m.rsee = (beta_hat - beta_true).norm();
  m.cve = kNaN;
  m.mspe = y_test.size() > 0 ? (y_test - y_hat).squaredNorm() / static_cast<double>(y_test.size()) : kNaN;
  return m;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("scenario: expected a JSON object at /");
  ScenarioConfig c;
  auto field = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      target = j.at(key).get<std::decay_t<decltype(target)>>();
    } catch (const nlohmann::json::exception&) {
      throw InputError(std::string("scenario: invalid value at /") + key);
    }
  };
  field("name", c.name);
  field("generator", c.generator);
  field("n", c.n);
  field("p", c.p);
  field("s", c.s);
  field("beta", c.beta);
  field("gamma", c.gamma);
  field("B", c.B);
  field("x_batches", c.x_batches);
  field("K", c.K);
  field("strategies", c.strategies);
  field("n_reps", c.n_reps);
  field("base_seed", c.base_seed);
  field("holdout_fraction", c.holdout_fraction);
  field("n_lambda", c.n_lambda);

  if (c.generator != "appendix" && c.generator != "confounder" && c.generator != "bad_blup") {
    throw InputError("scenario: invalid value at /generator (expected appendix, confounder or bad_blup)");
  }
  for (std::size_t i = 0; i < c.strategies.size(); ++i) {
    try {
      parse_strategy(c.strategies[i]);
    } catch (const InputError&) {
      throw InputError("scenario: invalid value at /strategies/" + std::to_string(i));
    }
  }
  if (c.strategies.empty()) throw InputError("scenario: invalid value at /strategies (empty)");
  if (c.n_reps < 1) throw InputError("scenario: invalid value at /n_reps");
  if (c.K < 2) throw InputError("scenario: invalid value at /K");
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) {
    throw InputError("scenario: invalid value at /holdout_fraction");
  }
  if (c.n < 3 || c.p < 1) throw InputError("scenario: invalid value at /n or /p");
  return c;
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  return {{"name", c.name},         {"generator", c.generator}, {"n", c.n},
          {"p", c.p},               {"s", c.s},                 {"beta", c.beta},
          {"gamma", c.gamma},       {"B", c.B},                 {"x_batches", c.x_batches},
          {"K", c.K},               {"strategies", c.strategies}, {"n_reps", c.n_reps},
          {"base_seed", c.base_seed}, {"holdout_fraction", c.holdout_fraction}, {"n_lambda", c.n_lambda}};
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate) {
  return splitmix64(base_seed + static_cast<std::uint64_t>(replicate));
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<double> BenchmarkResult::column(const std::string& method, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    const auto& m = r.metrics;
    if (metric == "tdr") out.push_back(m.tdr);
    else if (metric == "fdr") out.push_back(m.fdr);
    else if (metric == "nvar") out.push_back(static_cast<double>(m.nvar));
    else if (metric == "rsee") out.push_back(m.rsee);
    else if (metric == "cve") out.push_back(m.cve);
    else if (metric == "mspe") out.push_back(m.mspe);
    else if (metric == "calibration") out.push_back(std::abs(m.cve - m.mspe) / m.mspe);
    else if (metric == "eta") out.push_back(r.eta);
    else throw InputError("unknown metric '" + metric + "'");
  }
  return out;
}

namespace {

struct Replicate {
  Dataset train;
  Matrix X_test;
  Vector y_test;
  Vector beta_true;
};

Replicate make_replicate(const ScenarioConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 seeder(seed);
  const std::uint64_t data_seed = seeder();
  const std::uint64_t confounder_seed = seeder();
  const std::uint64_t split_seed = seeder();

  SimDataset sim;
  if (cfg.generator == "confounder") {
    GeneratorConfig g{cfg.n, cfg.p, 0, 0.0, 0.0, cfg.x_batches};
    const Matrix X = generate_correlated_data(g, data_seed).X;
    sim = inject_confounder(X, ConfounderConfig{cfg.B, cfg.gamma, cfg.beta, cfg.s}, confounder_seed);
  } else {
    sim = generate_correlated_data(GeneratorConfig{cfg.n, cfg.p, cfg.s, cfg.gamma, cfg.beta, cfg.B}, data_seed);
  }

  Replicate rep;
  rep.beta_true = sim.beta_true;
  const auto n_test = static_cast<Index>(std::llround(cfg.holdout_fraction * static_cast<double>(cfg.n)));
  std::vector<Index> order(static_cast<std::size_t>(cfg.n));
  std::iota(order.begin(), order.end(), Index{0});
  if (n_test > 0) {
    std::mt19937_64 rng(split_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  IndexList test(order.begin(), order.begin() + n_test);
  IndexList train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());

  const Dataset all = sim.to_dataset();
  rep.train.X = select_rows(all.X, train);
  rep.train.y = select_entries(all.y, train);
  rep.train.feature_names = all.feature_names;
  for (Index i : train) rep.train.row_ids.push_back(all.row_ids[static_cast<std::size_t>(i)]);
  rep.X_test = select_rows(all.X, test);
  rep.y_test = select_entries(all.y, test);
  return rep;
}

std::vector<BenchmarkRow> run_replicate(const ScenarioConfig& cfg, int r) {
  const std::uint64_t seed = replicate_seed(cfg.base_seed, r);
  const Replicate rep = make_replicate(cfg, seed);
  std::mt19937_64 seeder(seed ^ 0x5f0d5eedULL);
  const std::uint64_t fold_seed = seeder();

  CvOptions opts;
  opts.fit.n_lambda = cfg.n_lambda;
  const PlmmFit full = fit_plmm(rep.train.X, rep.train.y, opts.fit);
  const FoldAssignment folds = assign_folds(rep.train.n(), cfg.K, fold_seed);

  struct Method {
    std::string name;
    CvStrategy strategy;
    BlupMode mode;
  };
  std::vector<Method> methods;
  if (cfg.generator == "bad_blup") {
    methods = {{"blup_correct", CvStrategy::full, BlupMode::correct},
               {"blup_incorrect", CvStrategy::full, BlupMode::incorrect}};
  } else {
    for (const auto& s : cfg.strategies) methods.push_back({s, parse_strategy(s), BlupMode::correct});
  }

  std::vector<BenchmarkRow> rows;
  for (const auto& m : methods) {
    CvOptions o = opts;
    o.blup_mode = m.mode;
    const CvResult cv = cross_validate(rep.train, m.strategy, folds, full, o);
    const Index l = cv.selection.min_index;
    Vector y_hat(0);
    if (rep.y_test.size() > 0) y_hat = predict_blup(full.model, rep.X_test, l);
    BenchmarkRow row;
    row.replicate = r;
    row.seed = seed;
    row.method = m.name;
    row.eta = full.model.eta;
    row.lambda = cv.selection.lambda_min;
    row.metrics = compute_metrics(full.model.beta.col(l), rep.beta_true, rep.y_test, y_hat);
    row.metrics.cve = cv.cve[l];
    rows.push_back(row);
  }
  return rows;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  if (v.empty()) return {kNaN, kNaN, kNaN};
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.median = median(v);
  return s;
}

}  // namespace

BenchmarkResult run_benchmark(const ScenarioConfig& cfg, int threads) {
  BenchmarkResult result;
  result.config = cfg;
  std::vector<std::vector<BenchmarkRow>> per_rep(static_cast<std::size_t>(cfg.n_reps));
  parallel_for(per_rep.size(), threads, [&](std::size_t r) {
    try {
      per_rep[r] = run_replicate(cfg, static_cast<int>(r));
    } catch (const Error& e) {
      rethrow_with_context(e, "replicate " + std::to_string(r) + ": ");
    }
  });
  std::vector<std::string> methods;
  for (auto& rows : per_rep) {
    for (auto& row : rows) {
      if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
      result.rows.push_back(std::move(row));
    }
  }
  const bool has_test = cfg.holdout_fraction > 0.0;
  for (const auto& m : methods) {
    for (const char* metric : {"tdr", "fdr", "nvar", "rsee", "cve", "eta"}) {
      result.summary[m][metric] = summarize(result.column(m, metric));
    }
    if (has_test) {
      result.summary[m]["mspe"] = summarize(result.column(m, "mspe"));
      result.summary[m]["calibration"] = summarize(result.column(m, "calibration"));
    }
  }
  return result;
}

std::string format_summary_table(const BenchmarkResult& result) {
  std::vector<std::string> methods;
  for (const auto& r : result.rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::vector<std::pair<std::string, std::string>> metrics{{"tdr", "TDR"}, {"fdr", "FDR"}, {"nvar", "NVAR"},
                                                           {"rsee", "RSEE"}, {"cve", "CVE"}};
  if (result.config.holdout_fraction > 0.0) metrics.emplace_back("mspe", "MSPE");

  std::ostringstream out;
  out << std::left << std::setw(8) << "";
  for (const auto& m : methods) out << std::setw(18) << m;
  out << '\n';
  for (const auto& [key, label] : metrics) {
    out << std::setw(8) << label;
    for (const auto& m : methods) {
      const auto& s = result.summary.at(m).at(key);
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(key == "nvar" ? 0 : 2) << s.mean << " (" << s.sd << ")";
      out << std::setw(18) << cell.str();
    }
    out << '\n';
  }
  out << "Format: Mean (SD); replicates = " << result.config.n_reps << '\n';
  return out.str();
}

}  // namespace plmm
