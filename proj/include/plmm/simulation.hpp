#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plmm/cv.hpp"

namespace plmm {

/// Synthetic data with known truth: y = X beta + Z gamma + eps, eps ~ N(0, I).
struct SimDataset {
  Matrix X;
  Vector y;
  Vector beta_true;
  Matrix Z;                    // n x B batch indicators
  Vector gamma;                // B equally spaced values on [-gamma, gamma]
  std::vector<int> batch_id;   // 0..B-1
  std::uint64_t seed = 0;

  Dataset to_dataset() const;
};

struct GeneratorConfig {
  Index n = 100;
  Index p = 256;
  Index s = 4;
  double gamma = 6.0;
  double beta = 2.0;
  int B = 20;
};

/// Batch-structured design: each of B consecutive blocks of n/B rows shares
/// a standard normal mean vector; the first s features carry the signal.
SimDataset generate_correlated_data(const GeneratorConfig& cfg, std::uint64_t seed);

struct ConfounderConfig {
  int B = 5;
  double gamma_mag = 2.0;
  double beta_mag = 2.0;
  Index s = 4;
};

/// Outcome on a fixed design with a random B-level grouping factor and s
/// randomly placed signals.
SimDataset inject_confounder(const Matrix& X, const ConfounderConfig& cfg, std::uint64_t seed);

struct SimMetrics {
  double tdr = 0.0;
  double fdr = 0.0;
  Index nvar = 0;
  double rsee = 0.0;
  double cve = 0.0;   // NaN when not applicable
  double mspe = 0.0;  // NaN without a test set
};

/// FDR is 0 when nothing is selected. MSPE is NaN when y_test is empty.
SimMetrics compute_metrics(const Vector& beta_hat, const Vector& beta_true, const Vector& y_test,
                           const Vector& y_hat);

/// Scenario kinds understood by run_benchmark.
///   appendix:   generate_correlated_data, then CV with each strategy
///   confounder: appendix design with a random grouping factor injected
///   bad_blup:   appendix data, full CV with correct vs incorrect BLUP
struct ScenarioConfig {
  std::string name = "scenario";
  std::string generator = "appendix";
  Index n = 100;
  Index p = 256;
  Index s = 4;
  double beta = 2.0;
  double gamma = 6.0;
  int B = 20;
  int x_batches = 20;  // batch structure of the design for `confounder`
  int K = 5;
  std::vector<std::string> strategies{"full", "inner", "outer"};
  int n_reps = 10;
  std::uint64_t base_seed = 1;
  double holdout_fraction = 0.0;
  int n_lambda = 100;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

struct BenchmarkRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string method;  // strategy name, or blup_correct / blup_incorrect
  double eta = 0.0;
  double lambda = 0.0;
  SimMetrics metrics;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
};

struct BenchmarkResult {
  ScenarioConfig config;
  std::vector<BenchmarkRow> rows;
  /// method -> metric name -> summary
  std::map<std::string, std::map<std::string, MetricSummary>> summary;

  std::vector<double> column(const std::string& method, const std::string& metric) const;
};

/// Seed of replicate r: splitmix64 of base_seed + r.
std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate);

/// Runs every replicate (replicates in parallel, up to `threads`).
BenchmarkResult run_benchmark(const ScenarioConfig& cfg, int threads = 1);

/// "Mean (SD)" table, one row per metric and one column per method.
std::string format_summary_table(const BenchmarkResult& result);

double median(std::vector<double> v);

}  // namespace plmm
