#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hilb/entropy.hpp"
#include "hilb/rng.hpp"

namespace {

using namespace hilb;

int exit_code_for(const Error& e) {
  std::string n = e.name();
  if (n == "usage") return 2;
  if (n == "format" || n == "inconsistent-representation" || n == "inconsistent-boundary" ||
      n == "not-an-ellipse")
    return 4;
  return 3;
}

struct FamilyOpts {
  int p = 3, q = 3, r = 4;
  double tau = 0.0;
  int L = 10;
};

void add_family(CLI::App* cmd, FamilyOpts& f, bool with_tau = true, bool with_L = true) {
  cmd->add_option("-p", f.p, "first Coxeter order")->capture_default_str();
  cmd->add_option("-q", f.q, "second Coxeter order")->capture_default_str();
  cmd->add_option("-r", f.r, "third Coxeter order")->capture_default_str();
  if (with_tau) cmd->add_option("--tau", f.tau, "deformation parameter")->capture_default_str();
  if (with_L) cmd->add_option("-L", f.L, "word-ball radius")->capture_default_str();
}

void add_cocycle(CLI::App* cmd, CocycleConfig& c) {
  cmd->add_option("--eps", c.eps, "perturbation size")->capture_default_str();
  cmd->add_option("--delta", c.delta, "renormalization interval")->capture_default_str();
  cmd->add_option("-T", c.T, "total flow time")->capture_default_str();
  cmd->add_option("-R", c.R, "recenter radius (0 = auto)")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
}

// ---- validate: the composed exact-identity suite ----

int run_validate(const FamilyOpts& f) {
  Representation rep = vinberg_triangle(f.p, f.q, f.r, f.tau);
  int failures = 0;
  auto check = [&](const char* name, bool ok, double worst) {
    std::printf("%-28s %s  (worst %.3e)\n", name, ok ? "ok" : "FAIL", worst);
    if (!ok) ++failures;
  };

  double cox = coxeter_residual(rep);
  check("coxeter-relations", cox <= 1e-8, cox);

  // Spectral identities and reversibility over the L = 8 census.
  Census census = conjugacy_census(rep, 8);
  double w1 = 0, w2 = 0, w3 = 0;
  for (const auto& c : census.classes) {
    EigenData d = c.data;
    EigenData di = eigen_data(Mat3(c.representative.matrix.inverse()));
    w1 = std::max(w1, std::abs((1.0 + d.eta) * d.alpha - 2.0));
    w2 = std::max(w2, std::abs(d.eta + di.eta));
    w3 = std::max(w3, std::abs(1.0 / d.alpha + 1.0 / di.alpha - 1.0));
  }
  check("spectral-shape (1+eta)a=2", w1 <= 1e-10, w1);
  check("reversibility eta", w2 <= 1e-10, w2);
  check("reversibility alpha", w3 <= 1e-10, w3);

  // Cross-ratio invariance under random projective maps.
  SplitMix64 rng(12345);
  double w4 = 0;
  for (int k = 0; k < 200; ++k) {
    Vec3 a(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0);
    Vec3 dir(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.2 * rng.uniform(-1, 1));
    double tp = -2 - rng.uniform(0, 1), tx = -rng.uniform(0.1, 0.9), ty = rng.uniform(0.1, 0.9),
           tq = 2 + rng.uniform(0, 1);
    ProjPoint P(a + tp * dir), X(a + tx * dir), Y(a + ty * dir), Q(a + tq * dir);
    Mat3 M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) = rng.uniform(-1, 1) + (i == j ? 2.0 : 0.0);
    double cr0 = cross_ratio(P, X, Y, Q);
    double cr1 = cross_ratio(apply_projective(M, P), apply_projective(M, X),
                             apply_projective(M, Y), apply_projective(M, Q));
    w4 = std::max(w4, std::abs(cr1 - cr0) / std::abs(cr0));
  }
  check("cross-ratio invariance", w4 <= 1e-8, w4);

  // Flow semigroup and flip conjugation on the reconstructed domain.
  ConvexDomain dom = limit_domain(rep, std::max(f.L, 8));
  double w5 = 0, w6 = 0;
  for (int k = 0; k < 50; ++k) {
    FlowPoint w = sample_initial(dom, 1000 + k);
    double s = rng.uniform(0.05, 0.6), t = rng.uniform(0.05, 0.6);
    FlowPoint ab = geodesic_flow(dom, geodesic_flow(dom, w, t), s);
    FlowPoint once = geodesic_flow(dom, w, s + t);
    w5 = std::max(w5, (ab.x - once.x).norm());
    FlowPoint back = flip(geodesic_flow(dom, flip(geodesic_flow(dom, w, t)), t));
    w6 = std::max(w6, (back.x - w.x).norm());
  }
  check("flow semigroup", w5 <= 1e-9, w5);
  check("flip conjugation", w6 <= 1e-9, w6);

  if (failures) {
    std::printf("validate: %d suite(s) failed\n", failures);
    return 4;
  }
  std::printf("validate: all identity suites pass\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical toolkit for Hilbert geodesic flows on divisible convex domains"};
  app.require_subcommand(1);
  app.set_config("--config", "", "structured config file; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  FamilyOpts fam;
  CocycleConfig cfg;
  int n_orbits = 16;
  std::string output, json_output;
  double tau_min = -0.8, tau_max = 0.8, tau_step = 0.2;
  std::string tau_grid_csv;

  auto* v = app.add_subcommand("validate", "run the exact algebraic-identity suites");
  add_family(v, fam);

  auto* c = app.add_subcommand("census", "enumerate conjugacy classes of the word ball");
  add_family(c, fam);

  auto* d = app.add_subcommand("domain", "reconstruct the divided domain and report the gap");
  add_family(d, fam);
  d->add_option("-o,--output", output, "save the domain to this path");

  auto* o = app.add_subcommand("orbit", "single-orbit Lyapunov and time-change estimates");
  add_family(o, fam);
  add_cocycle(o, cfg);

  auto* s = app.add_subcommand("sweep", "deformation sweep writing the report CSV");
  add_family(s, fam, /*with_tau=*/false);
  add_cocycle(s, cfg);
  s->add_option("--n-orbits", n_orbits, "orbits per grid point")->capture_default_str();
  s->add_option("--tau-min", tau_min)->capture_default_str();
  s->add_option("--tau-max", tau_max)->capture_default_str();
  s->add_option("--tau-step", tau_step)->capture_default_str();
  s->add_option("--tau-grid", tau_grid_csv, "explicit comma-separated grid (overrides min/max)");
  s->add_option("-o,--output", output, "CSV output path")->required();
  s->add_option("--json", json_output, "optional JSON mirror path");

  auto* n = app.add_subcommand("count", "topological entropy from closed-geodesic counting");
  add_family(n, fam);

  std::string report_path;
  auto* e = app.add_subcommand("explain", "summarize a report CSV");
  e->add_option("report", report_path, "report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    int code = app.exit(pe);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*v) return run_validate(fam);

    if (*c) {
      Representation rep = vinberg_triangle(fam.p, fam.q, fam.r, fam.tau);
      Census census = conjugacy_census(rep, fam.L);
      int prim = 0;
      double lmin = 1e18, lmax = 0;
      for (const auto& cl : census.classes) {
        if (cl.primitive) ++prim;
        lmin = std::min(lmin, cl.data.ell);
        lmax = std::max(lmax, cl.data.ell);
      }
      std::printf("classes %zu  primitive %d  skipped-nonproximal %d  ell in [%.6f, %.6f]\n",
                  census.classes.size(), prim, census.skipped_nonproximal, lmin, lmax);
      return 0;
    }

    if (*d) {
      Representation rep = vinberg_triangle(fam.p, fam.q, fam.r, fam.tau);
      ConvexDomain dom = limit_domain(rep, fam.L);
      std::printf("support points %zu  gap %.3e  chart condition %.3f\n",
                  dom.inner_points().size(), dom.gap(), dom.chart().condition());
      if (!output.empty()) save_domain(output, dom);
      return 0;
    }

    if (*o) {
      Representation rep = vinberg_triangle(fam.p, fam.q, fam.r, fam.tau);
      ConvexDomain dom = limit_domain(rep, fam.L);
      FlowPoint w0 = sample_initial(dom, cfg.seed);
      LyapunovEstimate est = lyapunov_spectrum(dom, rep, w0, cfg);
      AbramovRecord ab = beta_and_abramov(dom, rep, w0, cfg);
      std::printf("chi+ %.6f +- %.6f  chi0 %.6f  chi- %.6f  vol %.6f%s\n", est.chi_plus,
                  est.stderr_, est.chi_mid, est.chi_minus, est.vol_rate,
                  est.non_convergent ? "  [non-convergent]" : "");
      std::printf("renorms %d  halvings %d  T %.1f\n", est.renorm_count, est.delta_halvings,
                  est.T_used);
      std::printf("mean-beta %.6f  chi+_psi %.6f  abramov residual %.3e\n", ab.mean_beta,
                  ab.chi_plus_psi, ab.abramov_residual);
      return 0;
    }

    if (*s) {
      std::vector<double> grid;
      if (!tau_grid_csv.empty()) {
        std::string tok;
        std::istringstream ss(tau_grid_csv);
        while (std::getline(ss, tok, ','))
          if (!tok.empty()) grid.push_back(std::stod(tok));
      } else {
        if (tau_step <= 0) fail("usage", "tau-step must be positive");
        for (double t = tau_min; t <= tau_max + 1e-12; t += tau_step) grid.push_back(t);
        // Snap the value nearest zero so the grid contains the Fuchsian point.
        if (!grid.empty()) {
          size_t iz = 0;
          for (size_t i = 1; i < grid.size(); ++i)
            if (std::abs(grid[i]) < std::abs(grid[iz])) iz = i;
          if (std::abs(grid[iz]) < 0.5 * tau_step) grid[iz] = 0.0;
        }
      }
      if (grid.empty()) fail("usage", "empty tau grid");
      SweepResult res = deformation_sweep(fam.p, fam.q, fam.r, grid, cfg, fam.L, n_orbits);
      write_reports_csv(output, res.reports);
      if (!json_output.empty()) write_reports_json(json_output, res.reports);
      std::printf("sweep: %zu reports, %zu failures, max adjacent |dh| %.4f (threshold %.4f)\n",
                  res.reports.size(), res.failures.size(), res.max_adjacent_dh,
                  res.continuity_threshold);
      for (const auto& flr : res.failures)
        std::printf("  failed at tau %.3f: %s\n", flr.tau, flr.error.c_str());
      return 0;
    }

    if (*n) {
      Representation rep = vinberg_triangle(fam.p, fam.q, fam.r, fam.tau);
      HTopRecord rec = topological_entropy_count(rep, fam.L);
      std::printf("h_top %.6f  r_max %.4f  spread %.5f  primitive %d  [%s]\n", rec.h_top,
                  rec.r_max, rec.h_spread, rec.n_primitive, rec.caveat.c_str());
      return 0;
    }

    if (*e) {
      auto reports = read_reports_csv(report_path);
      bool bad = false;
      for (const auto& rp : reports) {
        std::fputs(explain_report(rp).c_str(), stdout);
        if (!report_identity_violations(rp).empty()) bad = true;
      }
      return bad ? 4 : 0;
    }
  } catch (const Error& err) {
    std::fprintf(stderr, "error [%s]: %s\n", err.name().c_str(), err.what());
    return exit_code_for(err);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  }
  return 2;
}
