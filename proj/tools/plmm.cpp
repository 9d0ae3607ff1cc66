// Command-line front end: simulate, fit, cv, predict, bench.
//
// Exit codes: 0 success, 2 usage or validation failure, 3 numerical failure.
// Errors are reported on stderr as a single JSON object.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <algorithm>
#include <charconv>
#include <iomanip>

#include "CLI11.hpp"
#include "json.hpp"
#include "plmm/plmm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = PLMM_VERSION;

/// Column-name mismatch between a model and new data.
struct ColumnMismatch : plmm::InputError {
  ColumnMismatch(std::vector<std::string> missing_, std::vector<std::string> extra_)
      : plmm::InputError("data columns do not match the model features"),
        missing(std::move(missing_)),
        extra(std::move(extra_)) {}
  std::vector<std::string> missing;
  std::vector<std::string> extra;
};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw plmm::InputError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

char parse_delimiter(const std::string& d) {
  if (d == "," || d == "comma") return ',';
  if (d == "\\t" || d == "tab" || d == "\t") return '\t';
  throw plmm::InputError("unsupported delimiter '" + d + "' (use comma or tab)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw plmm::InputError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw plmm::InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw plmm::InputError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

int default_threads() {
  if (const char* env = std::getenv("PLMM_THREADS")) {
    int t = 0;
    const std::string s(env);
    if (std::from_chars(s.data(), s.data() + s.size(), t).ec == std::errc{} && t > 0) return t;
  }
  return 1;
}

struct Manifest {
  std::string command;
  json args = json::object();
  json seeds = json::array();
  json inputs = json::object();
  json artifacts = json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& role, const fs::path& path) {
    inputs[role] = {{"path", path.string()}, {"fnv1a64", hex(file_hash(path))}};
  }

  void write(const fs::path& dir) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json j{{"command", command},   {"args", args},           {"seeds", seeds},
           {"inputs", inputs},     {"artifacts", artifacts}, {"duration_seconds", secs},
           {"version", kVersion}};
    write_json(dir / "manifest.json", j);
  }
};

struct PipelineArgs {
  std::string data;
  std::string outcome = "y";
  std::string delimiter = ",";
  std::string id_column;
  std::optional<double> eta;
  int eta_grid = 100;
  int n_lambda = 100;
  std::optional<double> min_ratio;
  int max_iter = 100000;
  double tolerance = 1e-7;
  int threads = default_threads();

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "Delimited data file with a header row")->required();
    app->add_option("--outcome", outcome, "Outcome column name");
    app->add_option("--delimiter", delimiter, "Field delimiter: comma or tab");
    app->add_option("--id-column", id_column, "Column holding row identifiers");
    app->add_option("--eta", eta, "Fix eta instead of estimating it")->check(CLI::Range(0.0, plmm::kEtaMax));
    app->add_option("--eta-grid", eta_grid, "Grid size for the eta search")->check(CLI::PositiveNumber);
    app->add_option("--n-lambda", n_lambda, "Number of lambda values")->check(CLI::PositiveNumber);
    app->add_option("--min-ratio", min_ratio, "lambda_min / lambda_max");
    app->add_option("--max-iter", max_iter, "Coordinate descent sweeps per lambda")->check(CLI::PositiveNumber);
    app->add_option("--tolerance", tolerance, "Convergence tolerance")->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "Worker threads (default: PLMM_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  plmm::FitOptions fit_options() const {
    plmm::FitOptions o;
    o.eta = eta;
    o.eta_options.grid_size = eta_grid;
    o.n_lambda = n_lambda;
    o.min_ratio = min_ratio;
    o.solver.max_iter = max_iter;
    o.solver.tolerance = tolerance;
    return o;
  }

  void record(Manifest& m) const {
    m.args["data"] = data;
    m.args["outcome"] = outcome;
    m.args["delimiter"] = delimiter;
    m.args["id_column"] = id_column;
    m.args["eta"] = eta ? json(*eta) : json(nullptr);
    m.args["eta_grid"] = eta_grid;
    m.args["n_lambda"] = n_lambda;
    m.args["min_ratio"] = min_ratio ? json(*min_ratio) : json(nullptr);
    m.args["max_iter"] = max_iter;
    m.args["tolerance"] = tolerance;
    m.args["threads"] = threads;
    m.input("data", data);
  }

  plmm::Dataset load() const { return plmm::load_dataset(data, outcome, parse_delimiter(delimiter), id_column); }
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw plmm::InputError("cannot create output directory " + dir.string());
}

std::string path_csv(const plmm::PlmmModel& model, bool coefficients) {
  std::ostringstream out;
  out << "lambda,nvar";
  if (coefficients) {
    out << ",intercept";
    for (const auto& name : model.feature_names) out << ',' << name;
  }
  out << '\n';
  for (plmm::Index l = 0; l < model.n_lambda(); ++l) {
    out << num(model.lambdas[l]) << ',' << model.nvar(l);
    if (coefficients) {
      out << ',' << num(model.intercepts[l]);
      for (plmm::Index j = 0; j < model.p(); ++j) out << ',' << num(model.beta(j, l));
    }
    out << '\n';
  }
  return out.str();
}

int cmd_fit(PipelineArgs& a, const std::string& out_dir, bool coefficients) {
  Manifest manifest;
  manifest.command = "fit";
  a.record(manifest);
  manifest.args["out"] = out_dir;
  manifest.args["coefficients"] = coefficients;
  prepare_dir(out_dir);

  const plmm::Dataset data = a.load();
  plmm::PlmmFit fit = plmm::fit_plmm(data.X, data.y, a.fit_options());
  fit.model.feature_names = data.feature_names;

  json model = plmm::model_to_json(fit.model);
  model["eta_loglik"] = fit.eta.loglik;
  model["tau2"] = fit.eta.tau2;
  write_json(fs::path(out_dir) / "model.json", model);
  write_text(fs::path(out_dir) / "path.csv", path_csv(fit.model, coefficients));
  manifest.artifacts = {"model.json", "path.csv"};
  manifest.write(out_dir);
  return 0;
}

int cmd_cv(PipelineArgs& a, const std::string& out_dir, int K, std::uint64_t seed, const std::string& strategy) {
  Manifest manifest;
  manifest.command = "cv";
  a.record(manifest);
  manifest.args["out"] = out_dir;
  manifest.args["k"] = K;
  manifest.args["seed"] = seed;
  manifest.args["strategy"] = strategy;
  manifest.seeds = {seed};

  std::vector<plmm::CvStrategy> strategies;
  if (strategy == "all") {
    strategies = {plmm::CvStrategy::full, plmm::CvStrategy::inner, plmm::CvStrategy::outer};
  } else {
    strategies = {plmm::parse_strategy(strategy)};
  }
  prepare_dir(out_dir);

  const plmm::Dataset data = a.load();
  plmm::CvOptions opts;
  opts.fit = a.fit_options();
  opts.threads = a.threads;
  plmm::PlmmFit full = plmm::fit_plmm(data.X, data.y, opts.fit);
  full.model.feature_names = data.feature_names;
  const plmm::FoldAssignment folds = plmm::assign_folds(data.n(), K, seed);

  std::ostringstream curve;
  curve << "strategy,lambda,cve,cvse,nvar\n";
  json summary{{"eta", full.model.eta}, {"K", K}, {"seed", seed}, {"n", data.n()}, {"p", data.p()},
               {"fold_of", folds.fold_of}, {"strategies", json::object()}};
  json selection;
  for (const auto s : strategies) {
    const plmm::CvResult cv = plmm::cross_validate(data, s, folds, full, opts);
    const std::string name = plmm::to_string(s);
    for (plmm::Index l = 0; l < cv.lambdas.size(); ++l) {
      curve << name << ',' << num(cv.lambdas[l]) << ',' << num(cv.cve[l]) << ',' << num(cv.cvse[l]) << ','
            << cv.nvar[static_cast<std::size_t>(l)] << '\n';
    }
    summary["strategies"][name] = {{"lambda_min", cv.selection.lambda_min},
                                   {"lambda_1se", cv.selection.lambda_1se},
                                   {"min_index", cv.selection.min_index},
                                   {"se_index", cv.selection.se_index},
                                   {"nvar_at_min", cv.nvar_at_min},
                                   {"nvar_at_1se", cv.nvar_at_1se},
                                   {"cve_at_min", cv.cve[cv.selection.min_index]},
                                   {"cvse_at_min", cv.cvse[cv.selection.min_index]}};
    if (selection.is_null()) {
      selection = {{"strategy", name},
                   {"min_index", cv.selection.min_index},
                   {"se_index", cv.selection.se_index}};
    }
  }
  json model = plmm::model_to_json(full.model);
  model["selection"] = selection;
  write_text(fs::path(out_dir) / "cv_curve.csv", curve.str());
  write_json(fs::path(out_dir) / "cv_summary.json", summary);
  write_json(fs::path(out_dir) / "model.json", model);
  manifest.artifacts = {"cv_curve.csv", "cv_summary.json", "model.json"};
  manifest.write(out_dir);
  return 0;
}

plmm::Matrix align_columns(const plmm::FeatureTable& table, const std::vector<std::string>& features) {
  std::map<std::string, plmm::Index> where;
  for (std::size_t j = 0; j < table.names.size(); ++j) where[table.names[j]] = static_cast<plmm::Index>(j);
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& f : features) {
    if (!where.count(f)) missing.push_back(f);
  }
  for (const auto& name : table.names) {
    if (std::find(features.begin(), features.end(), name) == features.end()) extra.push_back(name);
  }
  if (!missing.empty() || !extra.empty()) throw ColumnMismatch(missing, extra);
  plmm::Matrix X(table.X.rows(), static_cast<plmm::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) X.col(static_cast<plmm::Index>(j)) = table.X.col(where[features[j]]);
  return X;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& lambda,
                const std::string& mode, const std::string& out_path, const std::string& outcome,
                const std::string& delimiter, const std::string& id_column) {
  const json j = read_json(model_path);
  const plmm::PlmmModel model = plmm::model_from_json(j);

  plmm::Index l = 0;
  if (lambda == "min" || lambda == "1se") {
    if (!j.contains("selection") || j["selection"].is_null()) {
      throw plmm::InputError("--lambda " + lambda + " needs a model written by `cv`; use an index instead");
    }
    l = j["selection"].at(lambda == "min" ? "min_index" : "se_index").get<plmm::Index>();
  } else {
    const auto r = std::from_chars(lambda.data(), lambda.data() + lambda.size(), l);
    if (r.ec != std::errc{} || r.ptr != lambda.data() + lambda.size()) {
      throw plmm::InputError("--lambda must be min, 1se or an integer index");
    }
  }
  if (l < 0 || l >= model.n_lambda()) {
    throw plmm::InputError("--lambda index " + std::to_string(l) + " out of range [0, " +
                           std::to_string(model.n_lambda()) + ")");
  }

  std::vector<std::string> drop{outcome};
  if (!id_column.empty()) drop.push_back(id_column);
  const plmm::FeatureTable table = plmm::load_features(data_path, parse_delimiter(delimiter), drop);
  const plmm::Matrix X = align_columns(table, model.feature_names);

  plmm::Vector pred;
  if (mode == "blup") {
    pred = plmm::predict_blup(model, X, l);
  } else if (mode == "linear") {
    pred = plmm::predict_linear(model, X, l);
  } else {
    throw plmm::InputError("--mode must be blup or linear");
  }
  std::ostringstream out;
  out << "row,prediction\n";
  for (plmm::Index i = 0; i < pred.size(); ++i) out << (i + 1) << ',' << num(pred[i]) << '\n';
  write_text(out_path, out.str());
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, int threads, std::optional<int> reps) {
  Manifest manifest;
  manifest.command = "bench";
  manifest.args = {{"config", config_path}, {"out", out_dir}, {"threads", threads}};
  manifest.input("config", config_path);
  plmm::ScenarioConfig cfg = plmm::scenario_from_json(read_json(config_path));
  if (reps) {
    cfg.n_reps = *reps;
    manifest.args["reps"] = *reps;
  }
  for (int r = 0; r < cfg.n_reps; ++r) manifest.seeds.push_back(plmm::replicate_seed(cfg.base_seed, r));
  prepare_dir(out_dir);

  const plmm::BenchmarkResult res = plmm::run_benchmark(cfg, threads);
  std::ostringstream csv;
  csv << "replicate,seed,method,eta,lambda,tdr,fdr,nvar,rsee,cve,mspe\n";
  for (const auto& r : res.rows) {
    const auto& m = r.metrics;
    csv << r.replicate << ',' << r.seed << ',' << r.method << ',' << num(r.eta) << ',' << num(r.lambda) << ','
        << num(m.tdr) << ',' << num(m.fdr) << ',' << m.nvar << ',' << num(m.rsee) << ',' << num(m.cve) << ','
        << num(m.mspe) << '\n';
  }
  json summary{{"scenario", plmm::scenario_to_json(cfg)}, {"methods", json::object()}};
  for (const auto& [method, metrics] : res.summary) {
    for (const auto& [metric, s] : metrics) {
      summary["methods"][method][metric] = {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}};
    }
  }
  write_text(fs::path(out_dir) / "metrics.csv", csv.str());
  write_json(fs::path(out_dir) / "summary.json", summary);
  const std::string table = plmm::format_summary_table(res);
  write_text(fs::path(out_dir) / "summary.txt", table);
  std::cout << table;
  manifest.artifacts = {"metrics.csv", "summary.json", "summary.txt"};
  manifest.write(out_dir);
  return 0;
}

int cmd_simulate(const std::string& generator, plmm::GeneratorConfig g, plmm::ConfounderConfig c,
                 std::uint64_t seed, const std::string& out_path) {
  plmm::SimDataset sim;
  if (generator == "appendix") {
    sim = plmm::generate_correlated_data(g, seed);
  } else if (generator == "confounder") {
    plmm::GeneratorConfig base = g;
    base.s = 0;
    base.beta = 0.0;
    base.gamma = 0.0;
    sim = plmm::inject_confounder(plmm::generate_correlated_data(base, seed).X, c, seed + 1);
  } else {
    throw plmm::InputError("--generator must be appendix or confounder");
  }
  plmm::save_dataset(sim.to_dataset(), out_path);
  return 0;
}

int report(plmm::ErrorKind kind, const std::string& message, json extra = json::object()) {
  const int code = kind == plmm::ErrorKind::numerical ? 3 : 2;
  json j{{"error", kind == plmm::ErrorKind::numerical ? "numerical" : "invalid_input"},
         {"message", message},
         {"exit_code", code}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized linear mixed models with cross-validation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PipelineArgs fit_args;
  std::string fit_out = "plmm_fit";
  bool coefficients = false;
  auto* fit = app.add_subcommand("fit", "Fit the lasso path on preconditioned data");
  fit_args.add_to(fit);
  fit->add_option("--out", fit_out, "Output directory");
  fit->add_flag("--coefficients", coefficients, "Write per-feature coefficients to path.csv");

  PipelineArgs cv_args;
  std::string cv_out = "plmm_cv";
  int K = 5;
  std::uint64_t seed = 1;
  std::string strategy = "full";
  auto* cv = app.add_subcommand("cv", "Cross-validate and select lambda");
  cv_args.add_to(cv);
  cv->add_option("--k", K, "Number of folds")->check(CLI::Range(2, 1 << 20));
  cv->add_option("--seed", seed, "Seed for the fold assignment");
  cv->add_option("--strategy", strategy, "full, inner, outer or all")
      ->check(CLI::IsMember({"full", "inner", "outer", "all"}));
  cv->add_option("--out", cv_out, "Output directory");

  std::string model_path, predict_data, lambda = "min", mode = "blup", predict_out = "predictions.csv";
  std::string predict_outcome = "y", predict_delim = ",", predict_id;
  auto* predict = app.add_subcommand("predict", "Predict new observations from a fitted model");
  predict->add_option("--model", model_path, "model.json from fit or cv")->required();
  predict->add_option("--data", predict_data, "Delimited file with the model's feature columns")->required();
  predict->add_option("--lambda", lambda, "min, 1se or a path index");
  predict->add_option("--mode", mode, "blup or linear")->check(CLI::IsMember({"blup", "linear"}));
  predict->add_option("--out", predict_out, "Output CSV");
  predict->add_option("--outcome", predict_outcome, "Column ignored if present in --data");
  predict->add_option("--delimiter", predict_delim, "Field delimiter: comma or tab");
  predict->add_option("--id-column", predict_id, "Column ignored if present in --data");

  std::string config, bench_out = "plmm_bench";
  int bench_threads = default_threads();
  std::optional<int> bench_reps;
  auto* bench = app.add_subcommand("bench", "Run a simulation scenario");
  bench->add_option("--config", config, "Scenario JSON")->required();
  bench->add_option("--out", bench_out, "Output directory");
  bench->add_option("--threads", bench_threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--reps", bench_reps, "Override n_reps")->check(CLI::PositiveNumber);

  std::string generator = "appendix", sim_out = "sim.csv";
  plmm::GeneratorConfig gen;
  plmm::ConfounderConfig conf;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--generator", generator, "appendix or confounder");
  simulate->add_option("--n", gen.n);
  simulate->add_option("--p", gen.p);
  simulate->add_option("--s", gen.s);
  simulate->add_option("--beta", gen.beta);
  simulate->add_option("--gamma", gen.gamma);
  simulate->add_option("--B", gen.B, "Design batches");
  simulate->add_option("--confounder-levels", conf.B);
  simulate->add_option("--confounder-gamma", conf.gamma_mag);
  simulate->add_option("--confounder-beta", conf.beta_mag);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--out", sim_out, "Output CSV (outcome column y)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(plmm::ErrorKind::invalid_input, e.what());
  }

  try {
    if (*fit) return cmd_fit(fit_args, fit_out, coefficients);
    if (*cv) return cmd_cv(cv_args, cv_out, K, seed, strategy);
    if (*predict) {
      return cmd_predict(model_path, predict_data, lambda, mode, predict_out, predict_outcome, predict_delim,
                         predict_id);
    }
    if (*bench) return cmd_bench(config, bench_out, bench_threads, bench_reps);
    if (*simulate) {
      conf.s = gen.s;
      return cmd_simulate(generator, gen, conf, sim_seed, sim_out);
    }
  } catch (const ColumnMismatch& e) {
    return report(e.kind(), e.what(), {{"missing", e.missing}, {"extra", e.extra}});
  } catch (const plmm::Error& e) {
    return report(e.kind(), e.what());
  } catch (const json::exception& e) {
    return report(plmm::ErrorKind::invalid_input, std::string("malformed JSON input: ") + e.what());
  }
  return 0;
}
