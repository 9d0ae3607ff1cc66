#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "plmm/core_data.hpp"
#include "plmm/simulation.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run run(const testing::TempDir& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(PLMM_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = testing::read_file(err);
  return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(testing::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string simulate(const testing::TempDir& dir, int n = 60, int p = 80, int seed = 7) {
  const std::string out = (dir / "sim.csv").string();
  const Run r = run(dir, "simulate --n " + std::to_string(n) + " --p " + std::to_string(p) + " --B 10 --seed " +
                             std::to_string(seed) + " --out " + out);
  REQUIRE(r.code == 0);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit: beta0 is the outcome mean") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  REQUIRE(run(dir, "fit --data " + data + " --out " + (dir / "fit").string()).code == 0);
  const json model = json::parse(testing::read_file(dir / "fit" / "model.json"));
  const plmm::Dataset d = plmm::load_dataset(data, "y");
  CHECK(std::abs(model["beta0"].get<double>() - d.y.mean()) <= 1e-12);
  CHECK(fs::exists(dir / "fit" / "path.csv"));
  const json manifest = json::parse(testing::read_file(dir / "fit" / "manifest.json"));
  CHECK(manifest["command"] == "fit");
  CHECK(manifest["inputs"]["data"].contains("fnv1a64"));
  CHECK(manifest.contains("duration_seconds"));
  CHECK(manifest.contains("version"));
}

TEST_CASE("fit --eta 0 matches a plain lasso") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  REQUIRE(run(dir, "fit --data " + data + " --eta 0 --coefficients --out " + (dir / "fit").string()).code == 0);
  const auto rows = read_csv(dir / "fit" / "path.csv");
  const plmm::Dataset d = plmm::load_dataset(data, "y");
  REQUIRE(rows.size() == 101);
  CHECK(rows[0][0] == "lambda");
  CHECK(rows[0][3] == "x1");
  oracle::Vector lambdas(100);
  for (int l = 0; l < 100; ++l) lambdas[l] = std::stod(rows[static_cast<std::size_t>(l) + 1][0]);
  const oracle::Matrix ref = oracle::plain_lasso_path(d.X, d.y, lambdas);
  double worst = 0.0;
  for (int l = 0; l < 100; ++l) {
    for (int j = 0; j < 80; ++j) {
      worst = std::max(worst, std::abs(std::stod(rows[static_cast<std::size_t>(l) + 1][static_cast<std::size_t>(j) + 3]) -
                                       ref(j, l)));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("missing outcome column exits 2 and names it") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  const Run r = run(dir, "fit --data " + data + " --outcome phenotype --out " + (dir / "fit").string());
  CHECK(r.code == 2);
  const json err = json::parse(r.err);
  CHECK(err["error"] == "invalid_input");
  CHECK(err["message"].get<std::string>().find("phenotype") != std::string::npos);
}

TEST_CASE("solver failure exits 3") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  const Run r = run(dir, "fit --data " + data + " --max-iter 1 --out " + (dir / "fit").string());
  CHECK(r.code == 3);
  CHECK(json::parse(r.err)["error"] == "numerical");
}

TEST_CASE("usage errors exit 2") {
  testing::TempDir dir;
  CHECK(run(dir, "fit").code == 2);
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "cv --data x.csv --strategy sideways").code == 2);
  CHECK(run(dir, "fit --data " + (dir / "nope.csv").string()).code == 2);
}

TEST_CASE("cv --strategy all shares one grid and is deterministic") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  const std::string args = "cv --data " + data + " --strategy all --k 5 --seed 1 --out ";
  REQUIRE(run(dir, args + (dir / "a").string()).code == 0);
  REQUIRE(run(dir, args + (dir / "b").string() + " --threads 3").code == 0);

  const auto rows = read_csv(dir / "a" / "cv_curve.csv");
  REQUIRE(rows.size() == 301);
  CHECK(rows[0] == std::vector<std::string>{"strategy", "lambda", "cve", "cvse", "nvar"});
  for (std::size_t l = 1; l <= 100; ++l) {
    CHECK(rows[l][0] == "full");
    CHECK(rows[l + 100][0] == "inner");
    CHECK(rows[l + 200][0] == "outer");
    CHECK(rows[l][1] == rows[l + 100][1]);
    CHECK(rows[l][1] == rows[l + 200][1]);
  }

  const json summary = json::parse(testing::read_file(dir / "a" / "cv_summary.json"));
  for (const char* s : {"full", "inner", "outer"}) {
    const json& e = summary["strategies"][s];
    for (const char* key : {"lambda_min", "lambda_1se", "nvar_at_min", "nvar_at_1se"}) CHECK(e.contains(key));
    CHECK(e["lambda_1se"].get<double>() >= e["lambda_min"].get<double>());
  }

  for (const char* f : {"cv_curve.csv", "cv_summary.json", "model.json"}) {
    CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
  }
}

TEST_CASE("predict") {
  testing::TempDir dir;
  const std::string data = simulate(dir);
  REQUIRE(run(dir, "cv --data " + data + " --out " + (dir / "cv").string()).code == 0);
  const std::string model = (dir / "cv" / "model.json").string();
  const plmm::Dataset d = plmm::load_dataset(data, "y");

  SUBCASE("linear predictions at lambda_max equal the mean") {
    REQUIRE(run(dir, "predict --model " + model + " --data " + data + " --lambda 0 --mode linear --out " +
                         (dir / "p.csv").string())
                .code == 0);
    const auto rows = read_csv(dir / "p.csv");
    REQUIRE(rows.size() == 61);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) == doctest::Approx(d.y.mean()).epsilon(1e-12));
  }
  SUBCASE("blup and linear differ when eta > 0") {
    const json m = json::parse(testing::read_file(model));
    REQUIRE(m["eta"].get<double>() > 0.0);
    REQUIRE(run(dir, "predict --model " + model + " --data " + data + " --out " + (dir / "b.csv").string()).code == 0);
    REQUIRE(run(dir, "predict --model " + model + " --data " + data + " --mode linear --out " +
                         (dir / "l.csv").string())
                .code == 0);
    CHECK(testing::read_file(dir / "b.csv") != testing::read_file(dir / "l.csv"));
    const std::string again = (dir / "b2.csv").string();
    REQUIRE(run(dir, "predict --model " + model + " --data " + data + " --out " + again).code == 0);
    CHECK(testing::read_file(dir / "b.csv") == testing::read_file(again));
  }
  SUBCASE("mismatched columns list missing and extra names") {
    testing::write_file(dir / "bad.csv", "x1,x2,zz\n1,2,3\n4,5,6\n");
    const Run r = run(dir, "predict --model " + model + " --data " + (dir / "bad.csv").string() + " --out " +
                               (dir / "x.csv").string());
    CHECK(r.code == 2);
    const json err = json::parse(r.err);
    CHECK(err["extra"] == json::array({"zz"}));
    CHECK(err["missing"].size() == 78);
    CHECK(err["missing"][0] == "x3");
  }
  SUBCASE("selection keywords need a cv model") {
    REQUIRE(run(dir, "fit --data " + data + " --out " + (dir / "fit").string()).code == 0);
    const Run r = run(dir, "predict --model " + (dir / "fit" / "model.json").string() + " --data " + data +
                               " --lambda 1se --out " + (dir / "y.csv").string());
    CHECK(r.code == 2);
    CHECK(run(dir, "predict --model " + model + " --data " + data + " --lambda 500").code == 2);
  }
}

TEST_CASE("bench and simulate are deterministic") {
  testing::TempDir dir;
  testing::write_file(dir / "s.json", R"({"name": "tiny", "n": 40, "p": 50, "B": 8, "n_reps": 2, "n_lambda": 20,
                                          "holdout_fraction": 0.2})");
  const std::string cfg = (dir / "s.json").string();
  REQUIRE(run(dir, "bench --config " + cfg + " --out " + (dir / "a").string()).code == 0);
  REQUIRE(run(dir, "bench --config " + cfg + " --threads 2 --out " + (dir / "b").string()).code == 0);
  for (const char* f : {"metrics.csv", "summary.json", "summary.txt"}) {
    CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
  }
  CHECK(read_csv(dir / "a" / "metrics.csv").size() == 7);

  REQUIRE(run(dir, "simulate --seed 3 --out " + (dir / "s1.csv").string()).code == 0);
  REQUIRE(run(dir, "simulate --seed 3 --out " + (dir / "s2.csv").string()).code == 0);
  CHECK(testing::read_file(dir / "s1.csv") == testing::read_file(dir / "s2.csv"));

  REQUIRE(run(dir, "fit --data " + (dir / "s1.csv").string() + " --out " + (dir / "f1").string()).code == 0);
  REQUIRE(run(dir, "fit --data " + (dir / "s1.csv").string() + " --out " + (dir / "f2").string()).code == 0);
  CHECK(testing::read_file(dir / "f1" / "model.json") == testing::read_file(dir / "f2" / "model.json"));
  CHECK(testing::read_file(dir / "f1" / "path.csv") == testing::read_file(dir / "f2" / "path.csv"));
}

TEST_CASE("bench rejects a bad scenario with the field path") {
  testing::TempDir dir;
  testing::write_file(dir / "s.json", R"({"n_reps": "ten"})");
  const Run r = run(dir, "bench --config " + (dir / "s.json").string() + " --out " + (dir / "o").string());
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["message"].get<std::string>().find("/n_reps") != std::string::npos);
}

}  // TEST_SUITE
