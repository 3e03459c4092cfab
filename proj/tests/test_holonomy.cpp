#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "hilb/holonomy.hpp"
#include "hilb/rng.hpp"

using namespace hilb;

TEST_CASE("vinberg generators satisfy the Coxeter relations") {
  for (double tau : {0.0, -0.5, 0.8, 1.5}) {
    Representation rep = vinberg_triangle(3, 3, 4, tau);
    CHECK(coxeter_residual(rep) < 1e-11);
    for (const auto& g : rep.generators) CHECK(g.determinant() == doctest::Approx(-1.0));
  }
  CHECK(coxeter_residual(vinberg_triangle(2, 3, 7, 0.3)) < 1e-11);
}

TEST_CASE("non-hyperbolic triangles are rejected") {
  CHECK_THROWS_WITH_AS(vinberg_triangle(2, 3, 6, 0.0), doctest::Contains("not-hyperbolic"),
                       Error);
  CHECK_THROWS_WITH_AS(vinberg_triangle(2, 2, 2, 0.0), doctest::Contains("not-hyperbolic"),
                       Error);
  CHECK_THROWS_WITH_AS(vinberg_triangle(1, 7, 7, 0.0), doctest::Contains("not-hyperbolic"),
                       Error);
}

TEST_CASE("tau equals the log triple ratio of the pairings") {
  for (double tau : {0.0, 0.4, -1.1}) {
    Representation rep = vinberg_triangle(3, 3, 4, tau);
    // Generator rho_j = Id - v_j e_j^T, so column j holds the pairings c_ij.
    auto c = [&](int i, int j) { return -rep.generators[j](i, j); };
    double triple = (c(0, 1) * c(1, 2) * c(2, 0)) / (c(1, 0) * c(2, 1) * c(0, 2));
    CHECK(std::log(triple) == doctest::Approx(tau).epsilon(1e-12));
  }
}

TEST_CASE("invariant form exists exactly at tau = 0 and fails off it") {
  Representation rep0 = vinberg_triangle(3, 3, 4, 0.0);
  InvariantForm f0 = symmetric_invariant_form(rep0);
  CHECK(f0.residual < 1e-11);
  for (const auto& g : rep0.generators)
    CHECK((g.transpose() * f0.J * g - f0.J).cwiseAbs().maxCoeff() <
          1e-10 * f0.J.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat3> es(f0.J);
  CHECK(es.eigenvalues()(0) < 0);
  CHECK(es.eigenvalues()(1) > 0);
  CHECK(es.eigenvalues()(2) > 0);

  InvariantForm f8 = symmetric_invariant_form(vinberg_triangle(3, 3, 4, 0.8));
  CHECK(f8.residual > 1e-3);
}

TEST_CASE("word ball sizes and structure") {
  Representation rep = vinberg_triangle(3, 3, 4, 0.3);
  auto b2 = word_ball(rep, 2, false);
  // Identity, 3 reflections, 6 rotations (ij with i != j, one pair of each
  // order collapsing only at higher radius).
  CHECK(b2.size() == 10);
  auto e2 = word_ball(rep, 2, true);
  CHECK(e2.size() == 7);
  for (const auto& g : e2) CHECK(g.length() % 2 == 0);

  auto b6 = word_ball(rep, 6, false);
  int identities = 0;
  for (const auto& g : b6)
    if (g.word.empty()) ++identities;
  CHECK(identities == 1);
  // Words are shortest representatives: products reproduce the matrix.
  for (const auto& g : b6) {
    Mat3 m = Mat3::Identity();
    for (int idx : g.word) m = m * rep.generators[idx];
    CHECK((m - g.matrix).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("eigen data recovers a synthetic spectrum") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    double a = rng.uniform(0.3, 2.0), b = rng.uniform(0.05, 0.25);
    double l1 = std::exp(a), l2 = std::exp(b), l3 = 1.0 / (l1 * l2);
    Mat3 S;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S(i, j) = rng.uniform(-1, 1) + (i == j ? 2.0 : 0.0);
    Mat3 M = S * Eigen::Vector3d(l1, l2, l3).asDiagonal() * S.inverse();
    EigenData d = eigen_data(M);
    CHECK(d.lambda1 == doctest::Approx(l1).epsilon(1e-10));
    CHECK(d.lambda2 == doctest::Approx(l2).epsilon(1e-10));
    CHECK(d.lambda3 == doctest::Approx(l3).epsilon(1e-10));
    CHECK(proj_equal(d.fix_plus, ProjPoint(S.col(0)), 1e-8));
    CHECK(proj_equal(d.fix_minus, ProjPoint(S.col(2)), 1e-8));
    // Tangent at the attracting point spans the two dominant eigenvectors.
    CHECK(std::abs(incidence(d.fix_plus, d.tangent)) < 1e-8);
    CHECK(std::abs(incidence(ProjPoint(S.col(1)), d.tangent)) < 1e-8);
  }
}

TEST_CASE("spectral identities hold to machine precision") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    double b = rng.uniform(0.02, 0.4), a = b + rng.uniform(0.1, 2.0);
    Mat3 S;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S(i, j) = rng.uniform(-1, 1) + (i == j ? 2.0 : 0.0);
    Eigen::Vector3d lam(std::exp(a), std::exp(b), std::exp(-a - b));
    Mat3 M = S * lam.asDiagonal() * S.inverse();
    EigenData d = eigen_data(M);
    EigenData di = eigen_data(Mat3(M.inverse()));
    CHECK(std::abs((1.0 + d.eta) * d.alpha - 2.0) < 1e-11);
    CHECK(std::abs(1.0 / d.alpha + 1.0 / di.alpha - 1.0) < 1e-11);
    CHECK(std::abs(d.eta + di.eta) < 1e-11);
    CHECK(d.ell == doctest::Approx(0.5 * std::log(lam(0) / lam(2))).epsilon(1e-12));
    // Powers scale the translation length linearly.
    EigenData d3 = eigen_data(Mat3(M * M * M));
    CHECK(d3.ell == doctest::Approx(3.0 * d.ell).epsilon(1e-8));
  }
}

TEST_CASE("non-proximal matrices are refused") {
  Mat3 rot;
  double c = std::cos(0.7), s = std::sin(0.7);
  rot << c, -s, 0, s, c, 0, 0, 0, 1;
  CHECK_THROWS_WITH_AS(eigen_data(rot), doctest::Contains("non-proximal"), Error);
  CHECK_THROWS_WITH_AS(eigen_data(Mat3(-Mat3::Identity())), doctest::Contains("non-proximal"),
                       Error);
  CHECK_THROWS_WITH_AS(eigen_data(Mat3::Identity()), doctest::Contains("non-proximal"), Error);
}

TEST_CASE("census finds the known short classes of (3,3,4)") {
  Representation rep = vinberg_triangle(3, 3, 4, 0.0);
  Census c = conjugacy_census(rep, 8);
  REQUIRE(c.classes.size() >= 4);
  CHECK(c.skipped_nonproximal > 0);
  double ell_min = 1e18;
  for (const auto& cls : c.classes) ell_min = std::min(ell_min, cls.data.ell);
  // Systole of the Fuchsian (3,3,4) orbifold: cosh(ell) relates to the trace
  // 2 + 2 sqrt 2 of the shortest even word.
  CHECK(ell_min == doctest::Approx(1.2659).epsilon(1e-3));
  bool found_square = false;
  for (const auto& cls : c.classes) {
    CHECK(cls.multiplicity >= 1);
    EigenData di = eigen_data(Mat3(cls.representative.matrix.inverse()));
    CHECK(std::abs(cls.data.eta + di.eta) < 1e-11);
    if (!cls.primitive && std::abs(cls.data.ell - 2 * ell_min) < 1e-6) found_square = true;
  }
  CHECK(found_square);
}

TEST_CASE("census multiplicities exceed trace-collision counts at tau = 0") {
  // The Fuchsian point is arithmetic: distinct classes share traces, so the
  // census must separate them group-theoretically.
  Census c = conjugacy_census(vinberg_triangle(3, 3, 4, 0.0), 10);
  int with_dup_ell = 0;
  for (const auto& a : c.classes)
    for (const auto& b : c.classes)
      if (&a != &b && std::abs(a.data.ell - b.data.ell) < 1e-9) ++with_dup_ell;
  CHECK(with_dup_ell > 0);
}

TEST_CASE("representation save and load round trip") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "hilb_rep_roundtrip.txt";
  Representation rep = vinberg_triangle(3, 4, 5, 0.37);
  save_representation(p.string(), rep);
  Representation back = load_representation(p.string());
  CHECK(back.verified);
  CHECK(back.tau == rep.tau);
  CHECK(back.coxeter_orders == rep.coxeter_orders);
  for (size_t i = 0; i < rep.generators.size(); ++i)
    CHECK((back.generators[i] - rep.generators[i]).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(p);

  fs::path bad = fs::temp_directory_path() / "hilb_rep_bad.txt";
  std::FILE* f = std::fopen(bad.string().c_str(), "w");
  std::fputs("not a representation\n", f);
  std::fclose(f);
  CHECK_THROWS_WITH_AS(load_representation(bad.string()), doctest::Contains("format"), Error);
  fs::remove(bad);
}
