#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "plmm/core_data.hpp"
#include "plmm/simulation.hpp"

using namespace plmm;

TEST_SUITE("core_data") {

TEST_CASE("load_dataset parses a small CSV") {
  testing::TempDir dir;
  testing::write_file(dir / "d.csv", "a,y,b\n1,10,4\n2,20,5\n3,30,6\n");
  const Dataset d = load_dataset(dir / "d.csv", "y");
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(d.y[2] == 30.0);
  CHECK(d.X(1, 0) == 2.0);
  CHECK(d.X(1, 1) == 5.0);
  CHECK(d.row_ids == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("load_dataset accepts tabs and an id column") {
  testing::TempDir dir;
  testing::write_file(dir / "d.tsv", "id\ty\tx\nr1\t1\t2\nr2\t3\t4\n");
  const Dataset d = load_dataset(dir / "d.tsv", "y", '\t', "id");
  CHECK(d.p() == 1);
  CHECK(d.row_ids == std::vector<std::string>{"r1", "r2"});
}

TEST_CASE("load_dataset rejects NA with row and column") {
  testing::TempDir dir;
  testing::write_file(dir / "d.csv", "y,x1,x2\n1,2,3\n4,NA,6\n");
  try {
    load_dataset(dir / "d.csv", "y");
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'x1'") != std::string::npos);
  }
}

TEST_CASE("load_dataset error cases") {
  testing::TempDir dir;
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv", "y"), InputError);
  testing::write_file(dir / "one.csv", "y,x\n1,2\n");
  CHECK_THROWS_AS(load_dataset(dir / "one.csv", "y"), InputError);
  testing::write_file(dir / "noy.csv", "a,b\n1,2\n3,4\n");
  CHECK_THROWS_WITH_AS(load_dataset(dir / "noy.csv", "y"), doctest::Contains("'y'"), InputError);
  testing::write_file(dir / "inf.csv", "y,x\n1,inf\n3,4\n");
  CHECK_THROWS_AS(load_dataset(dir / "inf.csv", "y"), InputError);
  testing::write_file(dir / "dup.csv", "y,x,x\n1,2,3\n3,4,5\n");
  CHECK_THROWS_AS(load_dataset(dir / "dup.csv", "y"), InputError);
  testing::write_file(dir / "ragged.csv", "y,x\n1,2\n3\n");
  CHECK_THROWS_AS(load_dataset(dir / "ragged.csv", "y"), InputError);
}

TEST_CASE("save/load round trip is bit-identical") {
  testing::TempDir dir;
  const Dataset d = generate_correlated_data({}, 11).to_dataset();
  save_dataset(d, dir / "sim.csv");
  const Dataset back = load_dataset(dir / "sim.csv", "y");
  CHECK(back.X == d.X);
  CHECK(back.y == d.y);
  CHECK(back.feature_names == d.feature_names);
}

TEST_CASE("standardize: two-point column") {
  Matrix X(2, 1);
  X << 3.0, 7.0;
  const StandardizedMatrix s = standardize(X);
  CHECK(s.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(s.values(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.centers[0] == 5.0);
  CHECK(s.active[0]);
}

TEST_CASE("standardize: constant column is inactive and zeroed") {
  Matrix X(3, 2);
  X << 4, 1, 4, 2, 4, 6;
  const StandardizedMatrix s = standardize(X);
  CHECK_FALSE(s.active[0]);
  CHECK(s.values.col(0).isZero(0.0));
  CHECK(s.scales[0] == 0.0);
  CHECK(s.active[1]);
  CHECK(s.n_active() == 1);
}

TEST_CASE("standardize: moments of a random matrix") {
  const Matrix X = oracle::gaussian(20, 8, 3) * 3.0 + Matrix::Constant(20, 8, 2.0);
  const StandardizedMatrix s = standardize(X);
  const oracle::Moments raw = oracle::moments(X);
  for (Index j = 0; j < X.cols(); ++j) {
    CHECK(std::abs(s.values.col(j).mean()) <= 1e-12);
    CHECK(std::abs(s.values.col(j).squaredNorm() / 20.0 - 1.0) <= 1e-12);
    CHECK(s.centers[j] == doctest::Approx(raw.mean[j]).epsilon(1e-12));
    CHECK(s.scales[j] == doctest::Approx(raw.sd[j]).epsilon(1e-12));
  }
}

TEST_CASE("standardize rejects bad input") {
  CHECK_THROWS_AS(standardize(Matrix::Ones(1, 3)), InputError);
  CHECK_THROWS_AS(standardize(Matrix::Ones(4, 3), -1.0), InputError);
}

TEST_CASE("apply_standardization") {
  const Matrix X = oracle::gaussian(15, 5, 4);
  const StandardizedMatrix s = standardize(X);

  SUBCASE("training data reproduces values") {
    CHECK((apply_standardization(X, s) - s.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("row of centers maps to zero") {
    const Matrix row = s.centers.transpose();
    CHECK(apply_standardization(row, s).isZero(0.0));
  }
  SUBCASE("shift by one moves a column by 1/scale") {
    Matrix shifted = X;
    shifted.col(2).array() += 1.0;
    const Matrix d = apply_standardization(shifted, s) - apply_standardization(X, s);
    CHECK((d.col(2).array() - 1.0 / s.scales[2]).abs().maxCoeff() <= 1e-12);
    CHECK(d.col(1).isZero(1e-15));
  }
  SUBCASE("new data need not be centered") {
    const Matrix Xn = oracle::gaussian(6, 5, 99).array() + 3.0;
    CHECK(std::abs(apply_standardization(Xn, s).col(0).mean()) > 0.1);
  }
  SUBCASE("column mismatch") { CHECK_THROWS_AS(apply_standardization(Matrix::Ones(2, 4), s), InputError); }
}

TEST_CASE("standardization JSON keeps order and mask") {
  Matrix X = oracle::gaussian(10, 4, 5);
  X.col(1).setConstant(2.0);
  const StandardizedMatrix s = standardize(X);
  const StandardizedMatrix back = standardization_from_json(nlohmann::json::parse(standardization_to_json(s).dump()));
  CHECK(back.centers == s.centers);
  CHECK(back.scales == s.scales);
  CHECK((back.active == s.active).all());
  CHECK_FALSE(back.active[1]);
}

}  // TEST_SUITE
