#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hilb/entropy.hpp"
#include "hilb/rng.hpp"

using namespace hilb;

namespace {

EntropyReport quick_report(double tau, int n_orbits = 8, double T = 200) {
  Representation rep = vinberg_triangle(3, 3, 4, tau);
  ConvexDomain dom = limit_domain(rep, 10);
  CocycleConfig cfg;
  cfg.T = T;
  cfg.seed = 9;
  return srb_entropy_report(dom, rep, n_orbits, cfg);
}

}  // namespace

TEST_CASE("srb report at the Fuchsian point") {
  EntropyReport r = quick_report(0.0);
  CHECK(r.n_orbits == 8);
  CHECK(r.excluded_orbits == 0);
  CHECK(r.h_srb == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(r.eta) < 0.1);
  CHECK(r.alpha_srb == doctest::Approx(2.0).epsilon(0.05));
  CHECK(report_identity_violations(r).empty());
  CHECK(r.eta_consistent);
  // Orbit seeds derive from the report seed: same seed, same report.
  EntropyReport r2 = quick_report(0.0);
  CHECK(r2.h_srb == r.h_srb);
  CHECK(r2.h_srb_stderr == r.h_srb_stderr);
}

TEST_CASE("too few orbits is a usage error") {
  Representation rep = vinberg_triangle(3, 3, 4, 0.0);
  ConvexDomain dom = limit_domain(rep, 8);
  CHECK_THROWS_WITH_AS(srb_entropy_report(dom, rep, 4, CocycleConfig{}),
                       doctest::Contains("usage"), Error);
}

TEST_CASE("boundary alpha recovers the exponent of an exact circle") {
  Mat3 Q = Mat3::Identity();
  Q(2, 2) = -1.0;
  ConvexDomain disk = ConvexDomain::conic(Q, AffineChart());
  ProjPoint xi(1.0, 0.0, 1.0);
  ProjLine tangent(1.0, 0.0, -1.0);  // vertical tangent x = 1
  std::vector<ProjPoint> pts;
  for (int k = 1; k <= 40; ++k) {
    double th = 0.4 * std::pow(0.7, k);
    pts.emplace_back(std::cos(th), std::sin(th), 1.0);
    pts.emplace_back(std::cos(th * 1.31), -std::sin(th * 1.31), 1.0);
  }
  AlphaFit fit = boundary_alpha(disk, xi, tangent, pts, 1e-9, 0.5);
  CHECK(fit.n_points >= 20);
  CHECK(fit.alpha == doctest::Approx(2.0).epsilon(0.01));
  CHECK(fit.r_squared > 0.999);
}

TEST_CASE("boundary alpha rejects inconsistent samples") {
  Mat3 Q = Mat3::Identity();
  Q(2, 2) = -1.0;
  ConvexDomain disk = ConvexDomain::conic(Q, AffineChart());
  ProjPoint xi(1.0, 0.0, 1.0);
  ProjLine tangent(1.0, 0.0, -1.0);
  // Samples on the far side of the tangent line: not a convex boundary graph.
  std::vector<ProjPoint> wrong;
  for (int k = 1; k <= 20; ++k) wrong.emplace_back(1.0 + 0.01 * k, 0.02 * k, 1.0);
  CHECK_THROWS_WITH_AS(boundary_alpha(disk, xi, tangent, wrong, 1e-9, 0.5),
                       doctest::Contains("inconsistent-boundary"), Error);
  // Samples on the tangent line itself carry no curvature information.
  std::vector<ProjPoint> flat;
  for (int k = 1; k <= 20; ++k) flat.emplace_back(1.0, 0.003 * k, 1.0);
  CHECK_THROWS_WITH_AS(boundary_alpha(disk, xi, tangent, flat, 1e-9, 0.5),
                       doctest::Contains("inconsistent-boundary"), Error);
  // Too few usable scales.
  std::vector<ProjPoint> few = {ProjPoint(std::cos(0.1), std::sin(0.1), 1.0),
                                ProjPoint(std::cos(0.1), -std::sin(0.1), 1.0)};
  CHECK_THROWS_WITH_AS(boundary_alpha(disk, xi, tangent, few, 1e-9, 0.5),
                       doctest::Contains("insufficient"), Error);
}

TEST_CASE("topological entropy counting") {
  Representation rep = vinberg_triangle(3, 3, 4, 0.0);
  CHECK_THROWS_WITH_AS(topological_entropy_count(rep, 6), doctest::Contains("usage"), Error);
  CHECK_THROWS_WITH_AS(topological_entropy_count(rep, 8),
                       doctest::Contains("insufficient-census"), Error);
  HTopRecord rec = topological_entropy_count(rep, 12);
  CHECK(rec.n_primitive >= 10);
  CHECK(rec.r_max > 2.0);
  CHECK(rec.h_top == doctest::Approx(1.0).epsilon(0.15));
  CHECK(!rec.caveat.empty());
}

TEST_CASE("deformation sweep over a small grid") {
  CocycleConfig cfg;
  cfg.T = 150;
  cfg.seed = 3;
  std::vector<double> grid = {-0.4, 0.0, 0.4};
  SweepResult sr = deformation_sweep(3, 3, 4, grid, cfg, 10, 8);
  REQUIRE(sr.reports.size() == 3);
  CHECK(sr.failures.empty());
  CHECK(sr.max_adjacent_dh >= 0.0);
  CHECK(sr.continuity_threshold > 0.0);
  for (const auto& r : sr.reports) CHECK(report_identity_violations(r).empty());
  // h is largest at the Fuchsian point, up to noise at this short T.
  CHECK(sr.reports[1].h_srb >= sr.reports[0].h_srb - 0.05);
  CHECK(sr.reports[1].h_srb >= sr.reports[2].h_srb - 0.05);

  CHECK_THROWS_WITH_AS(deformation_sweep(3, 3, 4, {}, cfg, 10, 8), doctest::Contains("usage"),
                       Error);
  CHECK_THROWS_WITH_AS(deformation_sweep(3, 3, 4, {0.4, 0.0}, cfg, 10, 8),
                       doctest::Contains("usage"), Error);
  CHECK_THROWS_WITH_AS(deformation_sweep(3, 3, 4, {0.2, 0.4}, cfg, 10, 8),
                       doctest::Contains("usage"), Error);
}

TEST_CASE("csv round trip is exact") {
  namespace fs = std::filesystem;
  EntropyReport a = quick_report(0.0, 8, 120);
  EntropyReport b = a;
  b.tau = 0.25;
  b.h_srb = 0.987654321012345678;
  b.chi_plus = b.h_srb;
  b.eta = 2 * (b.h_srb - 1);
  b.alpha_srb = 2.0 / b.chi_plus;
  b.h_top = 0.95;
  b.h_top_caveat = "complete-to-R=3.2;li-matched";
  fs::path p = fs::temp_directory_path() / "hilb_reports.csv";
  write_reports_csv(p.string(), {a, b});
  auto back = read_reports_csv(p.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].h_srb == a.h_srb);
  CHECK(back[0].h_srb_stderr == a.h_srb_stderr);
  CHECK(back[1].h_srb == b.h_srb);
  CHECK(back[1].tau == b.tau);
  CHECK(back[1].h_top == b.h_top);
  CHECK(back[1].h_top_caveat == b.h_top_caveat);
  CHECK(back[0].seed == a.seed);
  CHECK(std::isnan(back[0].h_top));
  for (const auto& r : back) CHECK(report_identity_violations(r).empty());
  fs::remove(p);
}

TEST_CASE("csv header and shape are validated on read") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "hilb_bad.csv";
  {
    std::ofstream f(p);
    f << "family_p,family_q,family_r,tau\n3,3,4,0.0\n";
  }
  CHECK_THROWS_WITH_AS(read_reports_csv(p.string()), doctest::Contains("format"), Error);
  {
    std::ofstream f(p);
    f << "not,a,report,header,at,all\n";
  }
  CHECK_THROWS_WITH_AS(read_reports_csv(p.string()), doctest::Contains("format"), Error);
  fs::remove(p);
  CHECK_THROWS_WITH_AS(read_reports_csv((fs::temp_directory_path() / "nope.csv").string()),
                       doctest::Contains("format"), Error);
}

TEST_CASE("json mirror is parseable and matches the csv fields") {
  namespace fs = std::filesystem;
  EntropyReport a = quick_report(0.2, 8, 120);
  fs::path p = fs::temp_directory_path() / "hilb_reports.json";
  write_reports_json(p.string(), {a});
  std::ifstream f(p);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"h_srb\"") != std::string::npos);
  CHECK(text.find("\"tau\"") != std::string::npos);
  CHECK(text.find("\"seed\"") != std::string::npos);
  fs::remove(p);
}

TEST_CASE("identity violations catch tampering") {
  EntropyReport r = quick_report(0.0, 8, 120);
  CHECK(report_identity_violations(r).empty());
  EntropyReport t = r;
  t.h_srb += 0.01;
  CHECK(!report_identity_violations(t).empty());
  t = r;
  t.alpha_srb = 1.5;
  CHECK(!report_identity_violations(t).empty());
  t = r;
  t.eta += 0.2;
  CHECK(!report_identity_violations(t).empty());
}

TEST_CASE("explain report mentions the key diagnostics") {
  EntropyReport r = quick_report(0.0, 8, 200);
  std::string s = explain_report(r);
  CHECK(s.find("h_srb") != std::string::npos);
  CHECK(s.find("volume") != std::string::npos);
  CHECK(s.find("consistent with hyperbolic point") != std::string::npos);
}
