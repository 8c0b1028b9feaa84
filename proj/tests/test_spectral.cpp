#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <fstream>
#include <cmath>

#include "hypent/spectral.hpp"

using namespace hypent;

namespace {

Eigen::MatrixXd densify(const SparseMat& a) { return Eigen::MatrixXd(a); }

}  // namespace

TEST_CASE("ulam operator for baker3 at depth 1") {
  auto map = make_baker3();
  auto op = build_ulam(map, 1);
  REQUIRE(op.size() == 9);
  CHECK(op.max_column_defect < 1e-12);

  // J^s T = 1/3 per branch, full transition mass: column sums of A equal 3
  Eigen::MatrixXd A = densify(op.A);
  for (int j = 0; j < 9; ++j) {
    CHECK(A.col(j).sum() == doctest::Approx(3.0).epsilon(1e-12));
  }
  // unweighted kernel is column-stochastic
  Eigen::MatrixXd P = densify(op.P);
  for (int j = 0; j < 9; ++j) {
    CHECK(P.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // identity-like check: A applied to the uniform density reproduces
  // (L1)(x) = 1/J^sT = 3 cellwise
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(9);
  Eigen::VectorXd L1 = A * ones;
  for (int i = 0; i < 9; ++i) CHECK(L1[i] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("ulam operator for baker2u at depth 1: branch column sums") {
  auto map = make_baker2u(0.4);
  auto op = build_ulam(map, 1);
  REQUIRE(op.size() == 4);
  Eigen::MatrixXd A = densify(op.A);
  for (int j = 0; j < 4; ++j) {
    const double cx = op.cells.cells[j].centroid().x();
    const double expect = cx < 0.4 ? 1.0 / 0.4 : 1.0 / 0.6;
    CHECK(A.col(j).sum() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("leading right eigenvector of baker3 is uniform with lambda 3") {
  auto map = make_baker3();
  auto op = build_ulam(map, 2);
  auto pr = leading_right(op, EigMode::Power, 1e-12);
  REQUIRE(pr.converged);
  CHECK(pr.lambda == doctest::Approx(3.0).epsilon(1e-10));
  for (double m : pr.vec.masses) CHECK(m == doctest::Approx(1.0 / op.size()).epsilon(1e-9));

  auto pc = leading_right(op, EigMode::Cesaro, 1e-10);
  REQUIRE(pc.converged);
  CHECK(pc.lambda == doctest::Approx(pr.lambda).epsilon(1e-8));
  for (std::size_t i = 0; i < pr.vec.masses.size(); ++i) {
    CHECK(pc.vec.masses[i] == doctest::Approx(pr.vec.masses[i]).epsilon(1e-7));
  }
}

TEST_CASE("left eigenvector: baker3 Lebesgue seed stays uniform") {
  auto map = make_baker3();
  auto op = build_ulam(map, 1);
  auto right = leading_right(op, EigMode::Power, 1e-12);
  auto left = leading_left(op, lebesgue_masses(op), 1e-12);
  REQUIRE(left.converged);
  CHECK(std::abs(left.lambda - right.lambda) <= 2e-12 * right.lambda + 2e-10);
  for (double m : left.vec.masses) CHECK(m == doctest::Approx(1.0 / 9).epsilon(1e-9));

  // seeding with the eigenvector itself converges immediately
  auto again = leading_left(op, left.vec, 1e-12, 50);
  CHECK(again.converged);
  CHECK(again.lambda == doctest::Approx(left.lambda).epsilon(1e-10));
}

TEST_CASE("left eigenvector of baker2u is nonuniform across x-strips") {
  auto map = make_baker2u(0.4);
  auto op = build_ulam(map, 3);
  auto left = leading_left(op, lebesgue_masses(op), 1e-11);
  REQUIRE(left.converged);
  double lo = 1e300, hi = 0.0;
  for (double m : left.vec.masses) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK(hi / lo > 1.1);
}

TEST_CASE("degenerate seeds are rejected") {
  auto map = make_baker3();
  auto op = build_ulam(map, 1);
  DiscreteMeasure zero;
  zero.depth = op.depth;
  zero.masses.assign(op.size(), 0.0);
  CHECK_THROWS_AS(leading_left(op, zero, 1e-10), InvalidInput);
}

TEST_CASE("mme of baker3 is uniform; mme of baker2u balances the branches") {
  {
    auto op = build_ulam(make_baker3(), 2);
    auto r = leading_right(op, EigMode::Power, 1e-12);
    auto l = leading_left(op, lebesgue_masses(op), 1e-12);
    auto mme = build_mme(r.vec, l.vec);
    for (double m : mme.masses) CHECK(m == doctest::Approx(1.0 / op.size()).epsilon(1e-8));
  }
  {
    auto op = build_ulam(make_baker2u(0.4), 6);
    auto r = leading_right(op, EigMode::Power, 1e-11);
    auto l = leading_left(op, lebesgue_masses(op), 1e-11);
    auto mme = build_mme(r.vec, l.vec);
    // Parry measure of the full 2-shift gives each first-level cylinder 1/2,
    // while the SRB (Lebesgue) mass of {x < 0.4} is 0.4
    double left_mass = 0.0, lebesgue_left = 0.0;
    auto leb = lebesgue_masses(op);
    for (std::size_t i = 0; i < mme.masses.size(); ++i) {
      if (op.cells.cells[i].centroid().x() < 0.4) {
        left_mass += mme.masses[i];
        lebesgue_left += leb.masses[i];
      }
    }
    CHECK(left_mass == doctest::Approx(0.5).epsilon(0.04));
    CHECK(lebesgue_left == doctest::Approx(0.4).epsilon(1e-9));
  }
}

TEST_CASE("spectral gap of baker3 depth 1 against a dense eigensolve") {
  auto map = make_baker3();
  auto op = build_ulam(map, 1);
  auto r = leading_right(op, EigMode::Power, 1e-12);
  auto l = leading_left(op, lebesgue_masses(op), 1e-12);
  auto gap = spectral_gap(op, r, l);
  REQUIRE(gap.converged);

  Eigen::MatrixXd A = densify(op.A);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  std::vector<double> mags;
  for (int i = 0; i < 9; ++i) mags.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  CHECK(mags[0] == doctest::Approx(3.0).epsilon(1e-10));
  const double oracle_ratio = mags[1] / mags[0];
  CHECK(oracle_ratio <= 1.0 / 3 + 1e-12);
  CHECK(std::abs(gap.ratio - oracle_ratio) < 1e-5);  // both essentially zero here
}

TEST_CASE("rank-1 depth-0 operator has gap ratio 0") {
  auto map = make_baker3();
  auto op = build_ulam(map, 0);
  REQUIRE(op.size() == 1);
  auto r = leading_right(op, EigMode::Power, 1e-12);
  auto l = leading_left(op, lebesgue_masses(op), 1e-12);
  auto gap = spectral_gap(op, r, l);
  CHECK(gap.ratio == 0.0);
  CHECK(gap.converged);
}

TEST_CASE("cat spectral gap is strictly below 1") {
  auto op = build_ulam(make_cat(), 3);
  auto r = leading_right(op, EigMode::Power, 1e-10);
  auto l = leading_left(op, lebesgue_masses(op), 1e-10);
  auto gap = spectral_gap(op, r, l);
  CHECK(gap.ratio < 1.0);
  CHECK(gap.ratio > 0.0);
}

TEST_CASE("pushforward of the baker3 mme is exactly invariant") {
  auto op = build_ulam(make_baker3(), 2);
  auto r = leading_right(op, EigMode::Power, 1e-12);
  auto l = leading_left(op, lebesgue_masses(op), 1e-12);
  auto mme = build_mme(r.vec, l.vec);
  auto pushed = push_forward(op, mme);
  double tv = 0.0;
  for (std::size_t i = 0; i < mme.masses.size(); ++i) {
    tv += std::abs(pushed.masses[i] - mme.masses[i]);
  }
  CHECK(0.5 * tv < 1e-10);
}

TEST_CASE("cat leading eigenvalue approaches lambda_A with depth") {
  const double lambda_A = (3.0 + std::sqrt(5.0)) / 2.0;
  auto op = build_ulam(make_cat(), 4);
  auto r = leading_right(op, EigMode::Power, 1e-10);
  REQUIRE(r.converged);
  CHECK(std::abs(r.lambda - lambda_A) / lambda_A < 0.10);
}

TEST_CASE("leading eigenvector positive on cells with stable extent") {
  for (const auto* name : {"baker3", "baker2u:0.4", "cat"}) {
    auto map = load_map(name);
    auto op = build_ulam(map, 3);
    auto r = leading_right(op, EigMode::Power, 1e-11);
    REQUIRE(r.converged);
    for (std::size_t i = 0; i < op.size(); ++i) {
      if (op.cells.stable_diam[i] > 0.0) CHECK(r.vec.masses[i] > 0.0);
    }
  }
}

TEST_CASE("cat mme is close to Lebesgue on cells") {
  auto op = build_ulam(make_cat(), 3);
  auto r = leading_right(op, EigMode::Power, 1e-11);
  auto l = leading_left(op, lebesgue_masses(op), 1e-11);
  auto mme = build_mme(r.vec, l.vec);
  auto leb = lebesgue_masses(op);
  double tv = 0.0;
  for (std::size_t i = 0; i < mme.masses.size(); ++i) {
    tv += std::abs(mme.masses[i] - leb.masses[i]);
  }
  CHECK(0.5 * tv < 0.05);
}

TEST_CASE("coo export round-trips the triplets") {
  auto op = build_ulam(make_baker2u(0.4), 1);
  const std::string path = "/tmp/hypent_test.coo";
  write_coo(op, path);
  std::ifstream f(path);
  REQUIRE(f.good());
  int row, col;
  double value;
  int count = 0;
  double colsum0 = 0.0;
  while (f >> row >> col >> value) {
    ++count;
    if (col == 0) colsum0 += value;
  }
  CHECK(count == op.A.nonZeros());
  CHECK(colsum0 == doctest::Approx(2.5).epsilon(1e-12));  // left-strip weight
}
