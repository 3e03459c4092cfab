#include "hilb/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hilb/rng.hpp"

namespace hilb {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  while (a > kPi) a -= 2 * kPi;
  while (a < -kPi) a += 2 * kPi;
  return a;
}

// Chart action of a group element: B = C g C^{-1} acting projectively on
// chart points, with the induced pushforward on chart tangent vectors.
Mat3 chart_matrix(const ConvexDomain& dom, const Mat3& g) {
  return dom.chart().matrix() * g * dom.chart().inverse_matrix();
}

Vec2 chart_apply(const Mat3& B, const Vec2& x) {
  Vec3 y = B * Vec3(x(0), x(1), 1.0);
  if (std::abs(y(2)) < 1e-13 * y.cwiseAbs().maxCoeff())
    fail("chart-overflow", "deck transformation sends point to infinity");
  return Vec2(y(0) / y(2), y(1) / y(2));
}

Vec2 chart_pushforward(const Mat3& B, const Vec2& x, const Vec2& v) {
  Vec3 y = B * Vec3(x(0), x(1), 1.0);
  double w = y(2);
  Vec2 p(y(0) / w, y(1) / w);
  Vec2 n(B(0, 0) * v(0) + B(0, 1) * v(1), B(1, 0) * v(0) + B(1, 1) * v(1));
  double dw = B(2, 0) * v(0) + B(2, 1) * v(1);
  return (n - p * dw) / w;
}

void transform_state(const ConvexDomain& dom, const Mat3& B, FlowPoint& w) {
  Vec2 x = chart_apply(B, w.x);
  Vec2 d = chart_pushforward(B, w.x, w.dir);
  double n = d.norm();
  if (n < 1e-300) fail("chart-overflow", "degenerate pushforward");
  w.x = x;
  w.dir = d / n;
  w.chord = dom.ray_boundary(w.x, w.dir);
}

double dist_to_origin(const ConvexDomain& dom, const Vec2& x) {
  return dom.hilbert_distance(Vec2::Zero(), x);
}

}  // namespace

FlowPoint make_flow_point(const ConvexDomain& dom, const Vec2& x, const Vec2& dir) {
  double n = dir.norm();
  if (n < 1e-300) fail("degenerate-direction", "zero direction");
  FlowPoint w;
  w.x = x;
  w.dir = dir / n;
  w.chord = dom.ray_boundary(x, w.dir);
  return w;
}

FlowPoint geodesic_flow(const ConvexDomain& dom, const FlowPoint& w, double t) {
  (void)dom;
  const Vec2& pm = w.chord.p_minus;
  const Vec2& pp = w.chord.p_plus;
  double u = (w.x - pm).norm() / (w.x - pp).norm();
  double u2 = u * std::exp(2.0 * t);
  double s = u2 / (1.0 + u2);
  FlowPoint out = w;
  out.x = pm + s * (pp - pm);
  if ((out.x - pp).norm() < 1e-12 || (out.x - pm).norm() < 1e-12)
    fail("near-boundary-overflow", "flowed point too close to the boundary; recenter first");
  return out;
}

FlowPoint flip(const FlowPoint& w) {
  FlowPoint out = w;
  out.dir = -w.dir;
  std::swap(out.chord.p_minus, out.chord.p_plus);
  return out;
}

RecenterContext make_recenter_context(const Representation& rep) {
  RecenterContext ctx;
  for (auto& g : word_ball(rep, 2, /*even_only=*/true))
    if (!g.word.empty()) ctx.greedy_moves.push_back(g);
  for (auto& g : word_ball(rep, 6, /*even_only=*/true))
    if (!g.word.empty()) ctx.deep_moves.push_back(g);
  return ctx;
}

double dirichlet_radius_estimate(const ConvexDomain& dom, const Representation& rep) {
  double worst = 0.0;
  for (const auto& g : word_ball(rep, 2, /*even_only=*/true)) {
    if (g.word.empty()) continue;
    Mat3 B = chart_matrix(dom, g.matrix);
    try {
      worst = std::max(worst, dist_to_origin(dom, chart_apply(B, Vec2::Zero())));
    } catch (const Error&) {
    }
  }
  return 0.5 * worst;
}

std::vector<int> recenter(const ConvexDomain& dom, RecenterContext& ctx, double R,
                          FlowPoint& base, std::span<FlowPoint> companions) {
  double d0 = dist_to_origin(dom, base.x);
  if (d0 <= R) return {};

  Mat3 total = Mat3::Identity();
  std::vector<int> word;
  Vec2 x = base.x;

  auto try_move = [&](const GroupElement& g, double& best, int& best_idx, int idx) {
    Mat3 B = chart_matrix(dom, g.matrix);
    try {
      double d = dist_to_origin(dom, chart_apply(B, x));
      if (d < best - 1e-12) {
        best = d;
        best_idx = idx;
      }
    } catch (const Error&) {
    }
  };
  auto apply_move = [&](const GroupElement& g) {
    total = g.matrix * total;
    word.insert(word.begin(), g.word.begin(), g.word.end());
    x = chart_apply(chart_matrix(dom, g.matrix), x);
  };

  for (int iter = 0; iter < 200 && d0 > R; ++iter) {
    double best = d0;
    int best_idx = -1;
    for (size_t i = 0; i < ctx.greedy_moves.size(); ++i)
      try_move(ctx.greedy_moves[i], best, best_idx, static_cast<int>(i));
    if (best_idx >= 0) {
      apply_move(ctx.greedy_moves[best_idx]);
      ctx.last_move = best_idx;
      d0 = best;
      continue;
    }
    // Greedy stalled above R: one deep pass over the radius-6 ball.
    best_idx = -1;
    for (size_t i = 0; i < ctx.deep_moves.size(); ++i)
      try_move(ctx.deep_moves[i], best, best_idx, static_cast<int>(i));
    if (best_idx < 0)
      fail("recenter-failure",
           "search ball exhausted; best distance " + std::to_string(d0) + " > R");
    apply_move(ctx.deep_moves[best_idx]);
    d0 = best;
  }
  if (d0 > R)
    fail("recenter-failure", "did not reach radius R; best distance " + std::to_string(d0));

  transform_state(dom, chart_matrix(dom, total), base);
  for (auto& c : companions) transform_state(dom, chart_matrix(dom, total), c);
  return word;
}

namespace {

struct CocycleResult {
  double sums[3] = {0, 0, 0};
  std::vector<double> lead_rate;  // leading log-stretch per unit time, per step
  std::vector<double> step_dt;
  double T_used = 0;
  double S_psi = 0;
  double beta_integral = 0;
  int renorms = 0;
  int halvings = 0;
};

double batch_stderr(const std::vector<double>& v, const std::vector<double>& w) {
  const int nb = 32;
  const size_t n = v.size();
  if (n < 2 * nb) return 1e9;
  std::vector<double> means;
  size_t per = n / nb;
  for (int b = 0; b < nb; ++b) {
    double s = 0, sw = 0;
    for (size_t i = b * per; i < (b + 1) * per; ++i) {
      s += v[i] * w[i];
      sw += w[i];
    }
    means.push_back(s / sw);
  }
  double mu = 0;
  for (double m : means) mu += m;
  mu /= nb;
  double var = 0;
  for (double m : means) var += (m - mu) * (m - mu);
  var /= (nb - 1);
  return std::sqrt(var / nb);
}

CocycleResult run_cocycle(const ConvexDomain& dom, const Representation& rep, const FlowPoint& w0,
                          const CocycleConfig& cfg, bool with_beta) {
  if (!(cfg.eps > 0 && cfg.eps <= 1e-4)) fail("usage", "eps must lie in (0, 1e-4]");
  if (!(cfg.delta > 0 && cfg.delta <= 2.0)) fail("usage", "delta must lie in (0, 2]");
  if (cfg.T < 10 * cfg.delta) fail("usage", "T must be at least 10 renormalization intervals");

  RecenterContext ctx = make_recenter_context(rep);
  double est = dirichlet_radius_estimate(dom, rep);
  double R = cfg.R;
  if (R <= 0)
    R = std::max(1.05 * est + 0.2, 0.8);
  else if (R <= est)
    fail("usage", "recenter radius R below the Dirichlet radius estimate");

  const double eps = cfg.eps;
  double delta = cfg.delta;

  FlowPoint base = w0;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
  CocycleResult res;

  auto companion = [&](const FlowPoint& b, const Vec3& q, double sign) {
    Vec2 x = b.x + sign * eps * Vec2(q(0), q(1));
    double th = std::atan2(b.dir(1), b.dir(0)) + sign * eps * q(2);
    return make_flow_point(dom, x, Vec2(std::cos(th), std::sin(th)));
  };

  double t = 0;
  while (t < cfg.T - 1e-12) {
    FlowPoint comps[6];
    for (int j = 0; j < 3; ++j) {
      comps[2 * j] = companion(base, Q.col(j), +1.0);
      comps[2 * j + 1] = companion(base, Q.col(j), -1.0);
    }
    if (dist_to_origin(dom, base.x) > R) {
      recenter(dom, ctx, R, base, std::span<FlowPoint>(comps, 6));
      ++res.renorms;
    }

    Vec2 x_before = base.x;
    Vec2 u_dir = base.dir;
    FlowPoint base_next = geodesic_flow(dom, base, delta);
    for (auto& c : comps) c = geodesic_flow(dom, c, delta);

    double seg = (base_next.x - x_before).norm();
    res.S_psi += seg;
    if (with_beta) {
      // finsler_norm is normalized to 2 at a disk center; the metric speed
      // entering the time change is half of it.  Composite Gauss-Legendre:
      // the integrand steepens where the segment runs near the boundary.
      static const double gx[4] = {0.069431844202973712, 0.33000947820757187,
                                   0.66999052179242813, 0.93056815579702623};
      static const double gw[4] = {0.17392742256872693, 0.32607257743127307,
                                   0.32607257743127307, 0.17392742256872693};
      const int nsub = 8;
      for (int k = 0; k < nsub; ++k)
        for (int g = 0; g < 4; ++g) {
          double s = (k + gx[g]) / nsub;
          Vec2 xm = x_before + s * (base_next.x - x_before);
          res.beta_integral += 0.5 * dom.finsler_norm(xm, u_dir) * seg * gw[g] / nsub;
        }
    }

    // Central-difference displacement vectors in (x, y, angle).
    double th0 = std::atan2(base_next.dir(1), base_next.dir(0));
    bool in_range = true;
    Eigen::Matrix3d D;
    for (int j = 0; j < 3; ++j) {
      const FlowPoint& sp = comps[2 * j];
      const FlowPoint& sm = comps[2 * j + 1];
      double thp = std::atan2(sp.dir(1), sp.dir(0));
      double thm = std::atan2(sm.dir(1), sm.dir(0));
      D.col(j) = Vec3((sp.x(0) - sm.x(0)) / (2 * eps), (sp.x(1) - sm.x(1)) / (2 * eps),
                      wrap_angle(thp - thm) / (2 * eps));
      double np = std::hypot((sp.x - base_next.x).norm(), wrap_angle(thp - th0));
      double nm = std::hypot((sm.x - base_next.x).norm(), wrap_angle(thm - th0));
      if (std::min(np, nm) < eps / 100 || std::max(np, nm) > 100 * eps) in_range = false;
    }
    base = base_next;
    t += delta;
    if (!in_range) {
      // Perturbations left the linear window; halve the interval and drop
      // this step from the averages.
      if (delta > cfg.delta / 64) {
        delta *= 0.5;
        ++res.halvings;
      }
      continue;
    }

    Eigen::HouseholderQR<Eigen::Matrix3d> qr(D);
    Eigen::Matrix3d Rm = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::Matrix3d Qn = qr.householderQ();
    for (int j = 0; j < 3; ++j)
      if (Rm(j, j) < 0) Qn.col(j) = -Qn.col(j);
    Q = Qn;
    for (int j = 0; j < 3; ++j) res.sums[j] += std::log(std::abs(Rm(j, j)));
    res.lead_rate.push_back(std::log(std::abs(Rm(0, 0))) / delta);
    res.step_dt.push_back(delta);
    res.T_used += delta;
  }
  return res;
}

}  // namespace

LyapunovEstimate lyapunov_spectrum(const ConvexDomain& dom, const Representation& rep,
                                   const FlowPoint& w0, const CocycleConfig& cfg) {
  CocycleResult r = run_cocycle(dom, rep, w0, cfg, /*with_beta=*/false);
  LyapunovEstimate est;
  if (r.T_used <= 0) fail("unreliable-report", "no usable cocycle steps");
  double e[3] = {r.sums[0] / r.T_used, r.sums[1] / r.T_used, r.sums[2] / r.T_used};
  std::sort(e, e + 3, std::greater<>());
  est.chi_plus = e[0];
  est.chi_mid = e[1];
  est.chi_minus = e[2];
  est.vol_rate = e[0] + e[1] + e[2];
  est.stderr_ = batch_stderr(r.lead_rate, r.step_dt);
  est.T_used = r.T_used;
  est.renorm_count = r.renorms;
  est.delta_halvings = r.halvings;
  est.non_convergent = (est.stderr_ > 0.05) || (cfg.T < 100 * cfg.delta);
  return est;
}

AbramovRecord beta_and_abramov(const ConvexDomain& dom, const Representation& rep,
                               const FlowPoint& w0, const CocycleConfig& cfg) {
  CocycleResult r = run_cocycle(dom, rep, w0, cfg, /*with_beta=*/true);
  AbramovRecord rec;
  if (r.T_used <= 0 || r.S_psi <= 0) fail("unreliable-report", "no usable cocycle steps");
  double lead = *std::max_element(r.sums, r.sums + 3);
  rec.chi_plus_phi = lead / r.T_used;
  rec.chi_plus_psi = lead / r.S_psi;
  rec.mean_beta = r.beta_integral / r.S_psi;
  rec.abramov_residual = std::abs(rec.chi_plus_psi - rec.chi_plus_phi * rec.mean_beta);
  rec.stderr_ = batch_stderr(r.lead_rate, r.step_dt);
  rec.non_convergent = (rec.stderr_ > 0.05) || (cfg.T < 100 * cfg.delta);
  return rec;
}

FlowPoint sample_initial(const ConvexDomain& dom, std::uint64_t seed) {
  SplitMix64 rng(mix_seed(seed, 0x1c0ull));
  for (int tries = 0; tries < 1000; ++tries) {
    Vec2 x(rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35));
    double th = rng.uniform(0.0, 2 * kPi);
    if (!dom.contains(x)) continue;
    try {
      if (dist_to_origin(dom, x) > 1.2) continue;
      return make_flow_point(dom, x, Vec2(std::cos(th), std::sin(th)));
    } catch (const Error&) {
    }
  }
  fail("unreliable-report", "could not sample an interior initial condition");
}

}  // namespace hilb
