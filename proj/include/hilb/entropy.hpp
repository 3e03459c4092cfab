#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hilb/flow.hpp"

namespace hilb {

// Aggregated SRB estimate for one representation.  The serialized fields are
// exactly the CSV columns; identities h_srb = chi_plus, alpha_srb*chi_plus = 2
// and eta = 2(h_srb - 1) hold by construction and are re-checked on load.
struct EntropyReport {
  int family_p = 3, family_q = 3, family_r = 4;
  double tau = 0.0;
  int L = 0;
  double gap = 0.0;
  int n_orbits = 0;
  double T = 0.0;
  double h_srb = 0.0;
  double h_srb_stderr = 0.0;
  double chi_plus = 0.0;
  double chi_minus = 0.0;
  double eta = 0.0;
  double eta_volrate = 0.0;
  double alpha_srb = 0.0;
  double h_top = std::numeric_limits<double>::quiet_NaN();
  std::string h_top_caveat;
  int excluded_orbits = 0;
  std::uint64_t seed = 0;

  // Diagnostics, not serialized.
  double eta_volrate_stderr = 0.0;
  bool eta_consistent = true;
};

EntropyReport srb_entropy_report(const ConvexDomain& dom, const Representation& rep,
                                 int n_orbits, const CocycleConfig& cfg);

// Log-log regression exponent of the boundary graph about a boundary point.
struct AlphaFit {
  double alpha = 0.0;
  double r_squared = 0.0;
  double t_min = 0.0, t_max = 0.0;  // scale range actually used
  int n_points = 0;
  bool one_sided = false;
};

// Fits the slope of log((f(t)+f(-t))/2) against log|t| in the frame (tangent,
// inward normal) at xi; symmetric pairs by nearest-|t| matching across sides.
AlphaFit boundary_alpha(const ConvexDomain& dom, const ProjPoint& xi, const ProjLine& tangent,
                        const std::vector<ProjPoint>& points, double t_min = 1e-9,
                        double t_max = 0.5);

// Exponential growth rate of primitive closed-geodesic lengths.  The counting
// function is matched against the prime-geodesic asymptotic li(e^{hR}) over
// the window where the radius-L census is complete; a raw log-slope fit is
// strongly biased at the word lengths reachable in practice.
struct HTopRecord {
  double h_top = 0.0;
  double r_max = 0.0;    // completeness cutoff used for the fit
  double h_spread = 0.0; // dispersion of the per-point solutions
  int n_primitive = 0;
  std::string caveat;
};

HTopRecord topological_entropy_count(const Representation& rep, int L);

struct SweepFailure {
  double tau;
  std::string error;
};

struct SweepResult {
  std::vector<EntropyReport> reports;
  std::vector<SweepFailure> failures;
  double max_adjacent_dh = 0.0;
  double continuity_threshold = 0.0;  // 3 joint stderr + mesh term
};

SweepResult deformation_sweep(int p, int q, int r, const std::vector<double>& tau_grid,
                              const CocycleConfig& cfg, int L, int n_orbits);

// CSV / JSON serialization; fixed column order is the stability contract.
void write_reports_csv(const std::string& path, const std::vector<EntropyReport>& reports);
std::vector<EntropyReport> read_reports_csv(const std::string& path);
void write_reports_json(const std::string& path, const std::vector<EntropyReport>& reports);

// Construction invariants that must survive a serialization round trip;
// returns human-readable violations (empty = consistent).
std::vector<std::string> report_identity_violations(const EntropyReport& r);

// Multi-line plain-text summary of one report (identity checks, volume-rate
// agreement, hyperbolic-point comparison).
std::string explain_report(const EntropyReport& r);

}  // namespace hilb
