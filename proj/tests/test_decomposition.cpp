#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "plmm/decomposition.hpp"
#include "plmm/simulation.hpp"

using namespace plmm;

namespace {

Matrix sigma(const Kinship& k, double eta) {
  const Index n = k.K.rows();
  return eta * k.K + (1.0 - eta) * Matrix::Identity(n, n);
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("kinship of a single two-point column") {
  Matrix X(2, 1);
  X << 0.0, 2.0;
  const Kinship k = compute_kinship(standardize(X));
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK((k.K - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("kinship invariants") {
  const Matrix X = oracle::gaussian(10, 30, 7);
  const StandardizedMatrix s = standardize(X);
  const Kinship k = compute_kinship(s);
  CHECK((k.K - k.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((k.K * Vector::Ones(10)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(std::abs(k.K.trace() - 10.0) <= 1e-8);
  const Matrix direct = s.values * s.values.transpose() / 30.0;
  CHECK((k.K - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("kinship counts only active columns") {
  Matrix X = oracle::gaussian(8, 5, 8);
  X.col(3).setConstant(1.0);
  const StandardizedMatrix s = standardize(X);
  const Kinship k = compute_kinship(s);
  CHECK(std::abs(k.K.trace() - 8.0) <= 1e-10);
  X.col(0).setConstant(0.0);
  X.col(1).setConstant(0.0);
  X.col(2).setConstant(0.0);
  X.col(4).setConstant(0.0);
  CHECK_THROWS_AS(compute_kinship(standardize(X)), InputError);
}

TEST_CASE("kinship is invariant to column order") {
  const Matrix X = oracle::gaussian(12, 20, 9);
  std::vector<Index> perm(20);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix Xp(12, 20);
  for (Index j = 0; j < 20; ++j) Xp.col(j) = X.col(perm[static_cast<std::size_t>(j)]);
  const Matrix a = compute_kinship(standardize(X)).K;
  const Matrix b = compute_kinship(standardize(Xp)).K;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("eigendecompose 2x2") {
  Kinship k;
  k.K.resize(2, 2);
  k.K << 1, -1, -1, 1;
  const Spectrum sp = eigendecompose(k);
  CHECK(sp.s[0] == doctest::Approx(2.0));
  CHECK(std::abs(sp.s[1]) <= 1e-12);
  CHECK(std::abs(std::abs(sp.U(0, 0)) - std::sqrt(0.5)) <= 1e-12);
  CHECK(std::abs(sp.U(0, 0) + sp.U(1, 0)) <= 1e-12);
}

TEST_CASE("eigendecompose: orthogonality, ordering, reconstruction") {
  const Kinship k = compute_kinship(standardize(oracle::gaussian(30, 12, 10)));
  const Spectrum sp = eigendecompose(k);
  CHECK(sp.U.rows() == 30);
  CHECK(sp.U.cols() == 30);
  CHECK((sp.U.transpose() * sp.U - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff() <= 1e-8);
  for (Index i = 1; i < 30; ++i) CHECK(sp.s[i] <= sp.s[i - 1]);
  CHECK((sp.s.array() >= 0.0).all());
  const Matrix rebuilt = sp.U * sp.s.asDiagonal() * sp.U.transpose();
  CHECK((rebuilt - k.K).norm() / k.K.norm() <= 1e-7);
}

TEST_CASE("eigendecompose rejects a clearly indefinite matrix") {
  Kinship k;
  k.K = Matrix::Identity(3, 3);
  k.K(2, 2) = -0.5;
  CHECK_THROWS_AS(eigendecompose(k), NumericalError);
}

TEST_CASE("appendix data: rank is n - 1 when p >= n") {
  const SimDataset d = generate_correlated_data({}, 21);
  const Spectrum sp = eigendecompose(compute_kinship(standardize(d.X)));
  const Index above = (sp.s.array() > 1e-8).count();
  const StandardizedMatrix s = standardize(d.X);
  const Index rank = s.values.fullPivHouseholderQr().rank();
  CHECK(rank == 99);
  CHECK(above == rank);
}

TEST_CASE("Lemma 1 dichotomy holds for every eigenpair") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Index n = seed % 2 == 0 ? 20 : 40;
    const Index p = seed < 3 ? 10 : 200;
    const Spectrum sp = eigendecompose(compute_kinship(standardize(oracle::gaussian(n, p, 100 + seed))));
    for (Index k = 0; k < n; ++k) {
      CHECK(std::min(std::abs(sp.s[k]), std::abs(sp.U.col(k).mean())) <= 1e-8);
    }
  }
}

TEST_CASE("build_preconditioner weights") {
  Spectrum sp;
  sp.U = Matrix::Identity(3, 3);
  sp.s = Vector(3);
  sp.s << 2.0, 1.0, 0.0;
  CHECK(build_preconditioner(sp, 0.0).w.isOnes(0.0));
  const Preconditioner half = build_preconditioner(sp, 0.5);
  CHECK(half.w[1] == doctest::Approx(1.0));
  CHECK(half.w[0] == doctest::Approx(1.0 / std::sqrt(1.5)));
  CHECK(half.w[2] == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(build_preconditioner(sp, -0.1), InputError);
  CHECK_THROWS_AS(build_preconditioner(sp, 0.995), InputError);
}

TEST_CASE("eta = 0 gives the identity operator") {
  const Spectrum sp = eigendecompose(compute_kinship(standardize(oracle::gaussian(15, 20, 12))));
  const Preconditioner pre = build_preconditioner(sp, 0.0);
  CHECK((pre.matrix() - Matrix::Identity(15, 15)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("whitening and reconstruction") {
  const Kinship k = compute_kinship(standardize(oracle::gaussian(50, 80, 13)));
  const Spectrum sp = eigendecompose(k);
  for (double eta : {0.0, 0.3, 0.9}) {
    CAPTURE(eta);
    const Preconditioner pre = build_preconditioner(sp, eta);
    CHECK((pre.w.array() > 0.0).all());
    CHECK(pre.w.allFinite());
    const Vector d = eta * sp.s.array() + (1.0 - eta);
    CHECK((sp.U * d.asDiagonal() * sp.U.transpose() - sigma(k, eta)).cwiseAbs().maxCoeff() <= 1e-8);
    const Matrix M = pre.matrix();
    CHECK((M * sigma(k, eta) * M.transpose() - Matrix::Identity(50, 50)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("Lemma 2: inverse via the spectrum") {
  const Kinship k = compute_kinship(standardize(oracle::gaussian(40, 25, 14)));
  const Spectrum sp = eigendecompose(k);
  const double eta = 0.7;
  const Preconditioner pre = build_preconditioner(sp, eta);
  const Matrix inv = sp.U * pre.w.array().square().matrix().asDiagonal() * sp.U.transpose();
  CHECK((inv - sigma(k, eta).inverse()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("symmetric operator maps constants to constants") {
  const Spectrum sp = eigendecompose(compute_kinship(standardize(oracle::gaussian(25, 40, 15))));
  const Preconditioner pre = build_preconditioner(sp, 0.8);
  const Vector m1 = pre.apply(Vector::Ones(25));
  CHECK((m1.array() - 1.0 / std::sqrt(0.2)).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("restrict_rows keeps weights and selects rows") {
  const Spectrum sp = eigendecompose(compute_kinship(standardize(oracle::gaussian(10, 15, 16))));
  const Preconditioner pre = build_preconditioner(sp, 0.5);
  const IndexList rows{0, 3, 4, 9};
  const Preconditioner sub = restrict_rows(pre, rows);
  CHECK(sub.U.rows() == 4);
  CHECK(sub.w == pre.w);
  CHECK(sub.U.row(1) == pre.U.row(3));
}

TEST_CASE("spectrum cache round trip and hash check") {
  testing::TempDir dir;
  const StandardizedMatrix s = standardize(oracle::gaussian(12, 9, 17));
  const Spectrum sp = eigendecompose(compute_kinship(s));
  const std::uint64_t h = content_hash(s.values);
  save_spectrum(sp, h, dir / "spec.json");
  const Spectrum back = load_spectrum(dir / "spec.json", h);
  CHECK(back.U == sp.U);
  CHECK(back.s == sp.s);
  CHECK_THROWS_AS(load_spectrum(dir / "spec.json", h + 1), InputError);
}

}  // TEST_SUITE
