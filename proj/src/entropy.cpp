#include "hilb/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hilb/rng.hpp"
#include "json.hpp"

namespace hilb {

namespace {

struct WeightedStats {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Precision-weighted mean with between-sample dispersion for the error bar.
WeightedStats weighted_mean(const std::vector<double>& x, const std::vector<double>& se) {
  double sw = 0, sx = 0;
  std::vector<double> w(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double s = std::max(se[i], 1e-6);
    w[i] = 1.0 / (s * s);
    sw += w[i];
    sx += w[i] * x[i];
  }
  WeightedStats out;
  out.mean = sx / sw;
  if (x.size() > 1) {
    double v = 0;
    for (size_t i = 0; i < x.size(); ++i) v += w[i] * (x[i] - out.mean) * (x[i] - out.mean);
    out.stderr_ = std::sqrt(v / (sw * (static_cast<double>(x.size()) - 1)));
  }
  return out;
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LineFit f;
  if (sxx <= 0) fail("insufficient-data", "degenerate abscissa in regression");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace

EntropyReport srb_entropy_report(const ConvexDomain& dom, const Representation& rep,
                                 int n_orbits, const CocycleConfig& cfg) {
  if (n_orbits < 8) fail("usage", "n_orbits must be at least 8");
  std::vector<double> chip, chip_se, chim, vol;
  int excluded = 0;
  for (int i = 0; i < n_orbits; ++i) {
    std::uint64_t s = mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0);
    try {
      FlowPoint w0 = sample_initial(dom, s);
      LyapunovEstimate est = lyapunov_spectrum(dom, rep, w0, cfg);
      if (est.non_convergent) {
        ++excluded;
        continue;
      }
      chip.push_back(est.chi_plus);
      chip_se.push_back(est.stderr_);
      chim.push_back(est.chi_minus);
      vol.push_back(est.vol_rate);
    } catch (const Error&) {
      ++excluded;
    }
  }
  if (excluded * 2 > n_orbits)
    fail("unreliable-report", std::to_string(excluded) + " of " + std::to_string(n_orbits) +
                                  " orbits excluded");

  WeightedStats cp = weighted_mean(chip, chip_se);
  WeightedStats vr = weighted_mean(vol, chip_se);
  WeightedStats cm = weighted_mean(chim, chip_se);

  EntropyReport r;
  r.tau = rep.tau;
  r.n_orbits = n_orbits;
  r.T = cfg.T;
  r.seed = cfg.seed;
  r.gap = dom.gap();
  r.excluded_orbits = excluded;
  r.chi_plus = cp.mean;
  r.h_srb = cp.mean;
  r.h_srb_stderr = cp.stderr_;
  r.chi_minus = cm.mean;
  r.eta = 2.0 * (r.h_srb - 1.0);
  r.alpha_srb = 2.0 / r.chi_plus;
  r.eta_volrate = vr.mean;
  r.eta_volrate_stderr = vr.stderr_;
  double joint = 3.0 * std::hypot(2.0 * cp.stderr_, vr.stderr_);
  // The two eta estimates carry different O(1/T) transients, so short runs
  // need a deterministic allowance on top of the statistical one.
  double floor = std::max(1e-3, 3.0 / cfg.T);
  r.eta_consistent = std::abs(r.eta - r.eta_volrate) <= std::max(joint, floor);
  return r;
}

AlphaFit boundary_alpha(const ConvexDomain& dom, const ProjPoint& xi, const ProjLine& tangent,
                        const std::vector<ProjPoint>& points, double t_min, double t_max) {
  const AffineChart& chart = dom.chart();
  Vec2 x0 = chart.project(xi);
  // Tangent line in chart coordinates (dual transform), then the orthonormal
  // frame (tangent direction, inward normal).
  Vec3 lc = chart.inverse_matrix().transpose() * tangent.c;
  Vec2 normal(lc(0), lc(1));
  double nn = normal.norm();
  if (nn < 1e-13) fail("degenerate-configuration", "tangent line at infinity in this chart");
  normal /= nn;
  if (normal.dot(Vec2::Zero() - x0) < 0) normal = -normal;
  Vec2 tdir(-normal(1), normal(0));

  struct Sample {
    double t, f;
  };
  std::vector<Sample> pos, neg;
  int n_degenerate = 0;
  for (const auto& p : points) {
    Vec2 w = chart.project(p) - x0;
    double t = tdir.dot(w);
    double f = normal.dot(w);
    if (std::abs(t) < t_min || std::abs(t) > t_max) continue;
    if (f < -1e-12) fail("inconsistent-boundary", "non-convex graph sample (f < 0)");
    if (f <= 1e-12) {  // on the tangent to within the chart arithmetic floor
      ++n_degenerate;
      continue;
    }
    (t > 0 ? pos : neg).push_back({std::abs(t), f});
  }
  auto by_t = [](const Sample& a, const Sample& b) { return a.t < b.t; };
  std::sort(pos.begin(), pos.end(), by_t);
  std::sort(neg.begin(), neg.end(), by_t);

  AlphaFit fit;
  std::vector<double> ls, lg;
  if (pos.empty() || neg.empty()) {
    fit.one_sided = true;
    const auto& side = pos.empty() ? neg : pos;
    for (const auto& s : side) {
      ls.push_back(std::log(s.t));
      lg.push_back(std::log(s.f));
    }
  } else {
    // Nearest-|t| pairing across sides, each sample used once.
    size_t i = 0, j = 0;
    while (i < pos.size() && j < neg.size()) {
      double s = 0.5 * (pos[i].t + neg[j].t);
      double g = 0.5 * (pos[i].f + neg[j].f);
      ls.push_back(std::log(s));
      lg.push_back(std::log(g));
      ++i;
      ++j;
    }
  }
  if (ls.size() < 6) {
    if (n_degenerate >= 6)
      fail("inconsistent-boundary", "samples lie on the tangent line");
    fail("insufficient-scales", "only " + std::to_string(ls.size()) + " usable scales");
  }

  // Theil-Sen slope: the graph prefactor oscillates log-periodically under
  // the self-similar approach, which biases a least-squares slope; the median
  // of pairwise slopes cancels the oscillation.  Least squares still supplies
  // the r^2 diagnostic.
  std::vector<double> slopes;
  for (size_t a = 0; a < ls.size(); ++a)
    for (size_t b = a + 1; b < ls.size(); ++b)
      if (std::abs(ls[a] - ls[b]) > 0.5) slopes.push_back((lg[a] - lg[b]) / (ls[a] - ls[b]));
  LineFit lf = least_squares(ls, lg);
  if (slopes.size() >= 10) {
    std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
    fit.alpha = slopes[slopes.size() / 2];
  } else {
    fit.alpha = lf.slope;
  }
  fit.r_squared = lf.r2;
  fit.n_points = static_cast<int>(ls.size());
  fit.t_min = std::exp(*std::min_element(ls.begin(), ls.end()));
  fit.t_max = std::exp(*std::max_element(ls.begin(), ls.end()));
  return fit;
}

namespace {

// li(x) = Ei(log x); the series converges quickly for the exponents reached
// by word-ball censuses (hR well below 20).
double log_integral(double logx) {
  double s = 0.5772156649015329 + std::log(logx);
  double term = 1.0;
  for (int k = 1; k < 80; ++k) {
    term *= logx / k;
    s += term / k;
    if (term / k < 1e-15 * std::abs(s)) break;
  }
  return s;
}

}  // namespace

HTopRecord topological_entropy_count(const Representation& rep, int L) {
  if (L < 8) fail("usage", "L must be at least 8 for counting");
  Census census = conjugacy_census(rep, L);
  struct P {
    double ell;
    int len;
  };
  std::vector<P> prim;
  for (const auto& c : census.classes)
    if (c.primitive) prim.push_back({c.data.ell, c.representative.length()});
  if (prim.size() < 10)
    fail("insufficient-census", "only " + std::to_string(prim.size()) +
                                    " primitive classes at L = " + std::to_string(L));
  std::sort(prim.begin(), prim.end(), [](const P& a, const P& b) { return a.ell < b.ell; });

  // Per-letter length cost calibrates the completeness window: every geodesic
  // of length <= c*L has a representative word in the ball.
  double c = 1e18;
  for (const auto& p : prim) c = std::min(c, p.ell / p.len);
  double r_max = c * L;

  // Cumulative counts at distinct lengths; classes are unoriented (reflection
  // groups conjugate every element to its inverse), so the oriented count is
  // twice the class count.
  std::vector<std::pair<double, int>> counts;
  for (size_t i = 0; i < prim.size(); ++i) {
    double R = prim[i].ell;
    if (R > r_max) break;
    if (!counts.empty() && R - counts.back().first < 1e-9)
      counts.back().second = static_cast<int>(i + 1);
    else
      counts.push_back({R, static_cast<int>(i + 1)});
  }
  if (counts.size() < 4) fail("insufficient-census", "completeness window too small for a fit");

  // Solve li(e^{hR}) = 2 N(R) per point; average the deep half, where the
  // asymptotic is trustworthy.
  std::vector<double> hs;
  for (auto [R, N] : counts) {
    double h = 1.0;
    for (int it = 0; it < 100; ++it) {
      double f = log_integral(h * R) - 2.0 * N;
      double fp = std::exp(h * R) / h;
      double step = f / fp;
      h -= step;
      h = std::max(h, 0.05);
      if (std::abs(step) < 1e-12) break;
    }
    hs.push_back(h);
  }
  size_t from = hs.size() / 2;
  double mean = 0;
  for (size_t i = from; i < hs.size(); ++i) mean += hs[i];
  mean /= static_cast<double>(hs.size() - from);
  double spread = 0;
  for (size_t i = from; i < hs.size(); ++i) spread = std::max(spread, std::abs(hs[i] - mean));

  HTopRecord rec;
  rec.h_top = mean;
  rec.r_max = r_max;
  rec.h_spread = spread;
  rec.n_primitive = static_cast<int>(prim.size());
  char buf[128];
  std::snprintf(buf, sizeof buf, "complete-to-R=%.3f;li-matched;finite-R-truncation", r_max);
  rec.caveat = buf;
  return rec;
}

SweepResult deformation_sweep(int p, int q, int r, const std::vector<double>& tau_grid,
                              const CocycleConfig& cfg, int L, int n_orbits) {
  if (tau_grid.empty()) fail("usage", "empty tau grid");
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) fail("usage", "tau grid must be sorted");
  bool has_zero = false;
  for (double t : tau_grid) has_zero = has_zero || std::abs(t) < 1e-12;
  if (!has_zero) fail("usage", "tau grid must contain 0");

  SweepResult out;
  for (double tau : tau_grid) {
    try {
      Representation rep = vinberg_triangle(p, q, r, tau);
      ConvexDomain dom = limit_domain(rep, L);
      EntropyReport rep_out = srb_entropy_report(dom, rep, n_orbits, cfg);
      rep_out.family_p = p;
      rep_out.family_q = q;
      rep_out.family_r = r;
      rep_out.L = L;
      try {
        HTopRecord ht = topological_entropy_count(rep, L);
        rep_out.h_top = ht.h_top;
        rep_out.h_top_caveat = ht.caveat;
      } catch (const Error& e) {
        rep_out.h_top_caveat = e.name();
      }
      out.reports.push_back(std::move(rep_out));
    } catch (const Error& e) {
      out.failures.push_back({tau, e.name()});
    }
  }
  if (out.failures.size() * 4 > tau_grid.size())
    fail("sweep-failure", std::to_string(out.failures.size()) + " of " +
                              std::to_string(tau_grid.size()) + " grid points failed");

  double mesh = 0.0;
  for (size_t i = 1; i + 1 <= out.reports.size(); ++i) {
    const auto& a = out.reports[i - 1];
    const auto& b = out.reports[i];
    out.max_adjacent_dh = std::max(out.max_adjacent_dh, std::abs(b.h_srb - a.h_srb));
    double joint = 3.0 * std::hypot(a.h_srb_stderr, b.h_srb_stderr);
    mesh = std::max(mesh, joint + 0.25 * std::abs(b.tau - a.tau));
  }
  out.continuity_threshold = mesh;
  return out;
}

namespace {

const char* kHeader =
    "family_p,family_q,family_r,tau,L,gap,n_orbits,T,h_srb,h_srb_stderr,chi_plus,chi_minus,"
    "eta,eta_volrate,alpha_srb,h_top,h_top_caveat,excluded_orbits,seed";

std::string csv_row(const EntropyReport& r) {
  char buf[1024];
  std::string caveat = r.h_top_caveat;
  for (char& ch : caveat)
    if (ch == ',' || ch == '\n') ch = ';';
  std::snprintf(buf, sizeof buf,
                "%d,%d,%d,%.17g,%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%s,%d,%llu",
                r.family_p, r.family_q, r.family_r, r.tau, r.L, r.gap, r.n_orbits, r.T, r.h_srb,
                r.h_srb_stderr, r.chi_plus, r.chi_minus, r.eta, r.eta_volrate, r.alpha_srb,
                r.h_top, caveat.c_str(), r.excluded_orbits,
                static_cast<unsigned long long>(r.seed));
  return buf;
}

}  // namespace

void write_reports_csv(const std::string& path, const std::vector<EntropyReport>& reports) {
  std::ofstream out(path);
  if (!out) fail("format", "cannot open " + path + " for writing");
  out << kHeader << "\n";
  for (const auto& r : reports) out << csv_row(r) << "\n";
}

std::vector<EntropyReport> read_reports_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("format", "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail("format", "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    // Name the first mismatching column for the error message.
    std::istringstream got(line), want(kHeader);
    std::string g, w;
    while (std::getline(want, w, ',')) {
      if (!std::getline(got, g, ',') || g != w) fail("format", "missing or wrong column: " + w);
    }
    fail("format", "extra columns in header");
  }
  std::vector<EntropyReport> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> f;
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 19) fail("format", "row has " + std::to_string(f.size()) + " fields");
    EntropyReport r;
    try {
      r.family_p = std::stoi(f[0]);
      r.family_q = std::stoi(f[1]);
      r.family_r = std::stoi(f[2]);
      r.tau = std::stod(f[3]);
      r.L = std::stoi(f[4]);
      r.gap = std::stod(f[5]);
      r.n_orbits = std::stoi(f[6]);
      r.T = std::stod(f[7]);
      r.h_srb = std::stod(f[8]);
      r.h_srb_stderr = std::stod(f[9]);
      r.chi_plus = std::stod(f[10]);
      r.chi_minus = std::stod(f[11]);
      r.eta = std::stod(f[12]);
      r.eta_volrate = std::stod(f[13]);
      r.alpha_srb = std::stod(f[14]);
      r.h_top = std::stod(f[15]);
      r.h_top_caveat = f[16];
      r.excluded_orbits = std::stoi(f[17]);
      r.seed = std::stoull(f[18]);
    } catch (const std::exception&) {
      fail("format", "unparseable numeric field in row: " + line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_reports_json(const std::string& path, const std::vector<EntropyReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["family_p"] = r.family_p;
    j["family_q"] = r.family_q;
    j["family_r"] = r.family_r;
    j["tau"] = r.tau;
    j["L"] = r.L;
    j["gap"] = r.gap;
    j["n_orbits"] = r.n_orbits;
    j["T"] = r.T;
    j["h_srb"] = r.h_srb;
    j["h_srb_stderr"] = r.h_srb_stderr;
    j["chi_plus"] = r.chi_plus;
    j["chi_minus"] = r.chi_minus;
    j["eta"] = r.eta;
    j["eta_volrate"] = r.eta_volrate;
    j["alpha_srb"] = r.alpha_srb;
    j["h_top"] = r.h_top;
    j["h_top_caveat"] = r.h_top_caveat;
    j["excluded_orbits"] = r.excluded_orbits;
    j["seed"] = r.seed;
    arr.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) fail("format", "cannot open " + path + " for writing");
  out << arr.dump(2) << "\n";
}

std::vector<std::string> report_identity_violations(const EntropyReport& r) {
  std::vector<std::string> v;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  if (rel(r.h_srb, r.chi_plus) > 1e-9) v.push_back("h_srb != chi_plus");
  if (std::abs(r.alpha_srb * r.chi_plus - 2.0) > 1e-9) v.push_back("alpha_srb*chi_plus != 2");
  if (std::abs(r.eta - 2.0 * (r.h_srb - 1.0)) > 1e-9) v.push_back("eta != 2*(h_srb - 1)");
  return v;
}

std::string explain_report(const EntropyReport& r) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "family (%d,%d,%d)  tau = %.6g  L = %d  seed = %llu\n",
                r.family_p, r.family_q, r.family_r, r.tau, r.L,
                static_cast<unsigned long long>(r.seed));
  out << buf;
  std::snprintf(buf, sizeof buf, "h_srb = %.6f +- %.6f  (n_orbits = %d, excluded = %d, T = %g)\n",
                r.h_srb, r.h_srb_stderr, r.n_orbits, r.excluded_orbits, r.T);
  out << buf;
  auto viol = report_identity_violations(r);
  if (viol.empty()) {
    out << "identities: h = chi+, chi+*alpha = 2, eta = 2(h-1): all hold\n";
  } else {
    for (const auto& s : viol) out << "identity violated: " << s << "\n";
  }
  // Recomputed here so deserialized reports (which do not carry the volume
  // rate's own error bar) still get a meaningful check.
  bool agree = std::abs(r.eta - r.eta_volrate) <= std::max(6.0 * r.h_srb_stderr, 0.05);
  std::snprintf(buf, sizeof buf, "eta = %.6f  volume-rate eta = %.6f  (%s)\n", r.eta,
                r.eta_volrate, agree ? "agree" : "DISAGREE");
  out << buf;
  if (std::isfinite(r.h_top)) {
    std::snprintf(buf, sizeof buf, "h_top = %.6f  [%s]\n", r.h_top, r.h_top_caveat.c_str());
    out << buf;
  }
  double h_tol = std::max(3.0 * r.h_srb_stderr, r.T > 0 ? 3.0 / r.T : 1e-12);
  if (std::abs(r.h_srb - 1.0) <= h_tol)
    out << "consistent with hyperbolic point\n";
  else
    out << "away from the hyperbolic point (h_srb < 1)\n";
  return out.str();
}

}  // namespace hilb
