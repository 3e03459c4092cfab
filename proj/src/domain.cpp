#include "hilb/domain.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace hilb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross2(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

// CCW angle from a to b in [0, 2pi).
double angle_between(const Vec2& a, const Vec2& b) {
  double t = std::atan2(cross2(a, b), a.dot(b));
  return (t < 0) ? t + kTwoPi : t;
}

// Exit point of the ray x + t u (t > 0) through a convex CCW polygon with x
// strictly inside.  The vertex angles about x are cyclically monotone, so the
// crossed edge is found by binary search.
Vec2 polygon_exit(const std::vector<Vec2>& poly, const Vec2& x, const Vec2& u) {
  const int m = static_cast<int>(poly.size());
  const Vec2 a = poly[0] - x;
  const double target = angle_between(a, u);
  int lo = 0, hi = m;  // psi(lo) <= target < psi(hi), psi(m) = 2pi
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (angle_between(a, poly[mid] - x) <= target)
      lo = mid;
    else
      hi = mid;
  }
  const Vec2& A = poly[lo];
  const Vec2& B = poly[(lo + 1) % m];
  Vec2 e = B - A;
  // Solve x + t u = A + s e:  t = cross(A - x, e) / cross(u, e).
  double den = cross2(u, e);
  double t = (std::abs(den) > 1e-300) ? cross2(A - x, e) / den : -1.0;
  if (t > 0.0) return x + t * u;

  // Degenerate fallback: linear scan for the smallest positive crossing.
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    Vec2 P = poly[i], Q = poly[(i + 1) % m];
    Vec2 ee = Q - P;
    double dd = cross2(u, ee);
    if (std::abs(dd) < 1e-300) continue;
    double tt = cross2(P - x, ee) / dd;
    double ss = cross2(P - x, u) / dd;
    if (tt > 0.0 && ss >= -1e-9 && ss <= 1.0 + 1e-9) best = std::min(best, tt);
  }
  if (!std::isfinite(best)) fail("outside-domain", "ray does not exit the polygon");
  return x + best * u;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 e = b - a;
  double L2 = e.squaredNorm();
  double t = (L2 > 0) ? std::clamp((p - a).dot(e) / L2, 0.0, 1.0) : 0.0;
  return (p - (a + t * e)).norm();
}

}  // namespace

bool ConvexDomain::inside_polygon(const std::vector<Vec2>& poly, const std::vector<double>& angles,
                                  const Vec2& x) const {
  const int m = static_cast<int>(poly.size());
  double r2 = x.squaredNorm();
  if (r2 < 1e-24) return true;  // chart origin is interior by construction
  double th = std::atan2(x(1), x(0));
  if (th < angles.front()) th += kTwoPi;
  auto it = std::upper_bound(angles.begin(), angles.end(), th);
  int i = (static_cast<int>(it - angles.begin()) - 1 + m) % m;
  // Strictly inside the edge (i, i+1); check neighbors too near vertices.
  for (int k = -1; k <= 1; ++k) {
    int j = (i + k + m) % m;
    Vec2 A = poly[j], B = poly[(j + 1) % m];
    if (cross2(B - A, x - A) <= 1e-14) return false;
  }
  return true;
}

bool ConvexDomain::contains(const Vec2& x) const {
  if (kind_ == Kind::Conic) {
    Vec3 X(x(0), x(1), 1.0);
    return X.dot(Qc_ * X) < -1e-14;
  }
  return inside_polygon(inner_, inner_angle_, x);
}

ChordHit ConvexDomain::ray_boundary(const Vec2& x, const Vec2& v) const {
  if (v.norm() < 1e-300) fail("degenerate-direction", "zero direction vector");
  Vec2 u = v / v.norm();
  if (kind_ == Kind::Conic) {
    Vec3 X(x(0), x(1), 1.0);
    Vec3 D(u(0), u(1), 0.0);
    double a = D.dot(Qc_ * D);
    double b = 2.0 * X.dot(Qc_ * D);
    double c = X.dot(Qc_ * X);
    if (c >= -1e-14) fail("outside-domain", "base point is not strictly inside the conic");
    double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0 || a <= 0.0) fail("outside-domain", "chord has no real intersection");
    double sq = std::sqrt(disc);
    double qq = -0.5 * (b + (b >= 0 ? sq : -sq));
    double t1 = qq / a, t2 = c / qq;
    double tp = std::max(t1, t2), tm = std::min(t1, t2);
    return {x + tm * u, x + tp * u, 0.0};
  }
  if (!inside_polygon(inner_, inner_angle_, x))
    fail("outside-domain", "base point is not strictly inside the inner hull");
  return {polygon_exit(outer_, x, -u), polygon_exit(outer_, x, u), gap_};
}

double ConvexDomain::hilbert_distance(const Vec2& x, const Vec2& y) const {
  Vec2 d = y - x;
  if (d.norm() < 1e-15) return 0.0;
  if (!contains(y)) fail("outside-domain", "second point is not strictly inside");
  ChordHit h = ray_boundary(x, d);
  double cr = ((h.p_minus - y).norm() * (h.p_plus - x).norm()) /
              ((h.p_minus - x).norm() * (h.p_plus - y).norm());
  return 0.5 * std::log(cr);
}

double ConvexDomain::distance_uncertainty(const Vec2& x, const Vec2& y) const {
  if (gap_ == 0.0) return 0.0;
  Vec2 d = y - x;
  if (d.norm() < 1e-15) return 0.0;
  ChordHit h = ray_boundary(x, d);
  return 0.5 * gap_ *
         (1.0 / (h.p_minus - x).norm() + 1.0 / (h.p_minus - y).norm() +
          1.0 / (h.p_plus - x).norm() + 1.0 / (h.p_plus - y).norm());
}

double ConvexDomain::finsler_norm(const Vec2& x, const Vec2& v) const {
  ChordHit h = ray_boundary(x, v);
  return (1.0 / (x - h.p_minus).norm() + 1.0 / (x - h.p_plus).norm()) * v.norm();
}

ConvexDomain ConvexDomain::conic(const Mat3& Q, const AffineChart& chart) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(Q);
  int npos = 0, nneg = 0;
  for (int i = 0; i < 3; ++i) {
    if (es.eigenvalues()(i) > 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff()) ++npos;
    if (es.eigenvalues()(i) < -1e-12 * es.eigenvalues().cwiseAbs().maxCoeff()) ++nneg;
  }
  if (!((npos == 2 && nneg == 1) || (npos == 1 && nneg == 2)))
    fail("not-an-ellipse", "quadratic form does not have signature (2,1)");

  ConvexDomain dom;
  dom.kind_ = Kind::Conic;
  dom.chart_ = chart;
  const Mat3& Ci = chart.inverse_matrix();
  Mat3 Qc = Ci.transpose() * Q * Ci;
  double at_origin = Qc(2, 2);
  if (std::abs(at_origin) < 1e-14 * Qc.cwiseAbs().maxCoeff())
    fail("not-an-ellipse", "chart origin lies on the conic");
  if (at_origin > 0) Qc = -Qc;
  // Bounded in the chart iff the form is positive on the line at infinity.
  if (Qc(0, 0) <= 0 || Qc(0, 0) * Qc(1, 1) - Qc(0, 1) * Qc(0, 1) <= 0)
    fail("not-an-ellipse", "conic is unbounded in this chart");
  dom.Qc_ = Qc;
  return dom;
}

ConvexDomain ConvexDomain::conic(const Mat3& Q) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(Q);
  Vec3 ev = es.eigenvalues();
  Mat3 U = es.eigenvectors();
  int npos = 0;
  for (int i = 0; i < 3; ++i)
    if (ev(i) > 0) ++npos;
  Mat3 Qn = Q;
  if (npos == 1) {
    Qn = -Q;
    ev = -ev;
    // eigenvalue order flips; recompute for simplicity
    es.compute(Qn);
    ev = es.eigenvalues();
    U = es.eigenvectors();
  } else if (npos != 2) {
    fail("not-an-ellipse", "quadratic form does not have signature (2,1)");
  }
  // Eigen sorts ascending: ev(0) < 0 < ev(1) <= ev(2).
  if (!(ev(0) < 0 && ev(1) > 0 && ev(2) > 0))
    fail("not-an-ellipse", "quadratic form does not have signature (2,1)");
  Mat3 B;
  B.row(0) = std::sqrt(ev(1)) * U.col(1).transpose();
  B.row(1) = std::sqrt(ev(2)) * U.col(2).transpose();
  B.row(2) = std::sqrt(-ev(0)) * U.col(0).transpose();
  Mat3 S = Mat3::Identity();
  S(0, 0) = S(1, 1) = 0.8;  // conic becomes the circle of radius 0.8
  return conic(Qn, AffineChart(S * B));
}

ConvexDomain ConvexDomain::sandwich(std::vector<Vec2> points, std::vector<Vec2> tangent_dirs,
                                    const AffineChart& chart) {
  if (points.size() != tangent_dirs.size())
    fail("format", "points/tangents size mismatch");
  ConvexDomain dom;
  dom.kind_ = Kind::Sandwich;
  dom.chart_ = chart;
  dom.inner_ = std::move(points);
  dom.inner_tan_ = std::move(tangent_dirs);
  dom.finalize_sandwich();
  return dom;
}

void ConvexDomain::finalize_sandwich() {
  const size_t n_raw = inner_.size();
  if (n_raw < 20) fail("insufficient-data", "only " + std::to_string(n_raw) + " boundary points");

  // Angular sort about the origin (the chart is centered on the barycenter).
  std::vector<int> order(n_raw);
  for (size_t i = 0; i < n_raw; ++i) order[i] = static_cast<int>(i);
  std::vector<double> ang(n_raw);
  for (size_t i = 0; i < n_raw; ++i) ang[i] = std::atan2(inner_[i](1), inner_[i](0));
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ang[a] < ang[b]; });

  std::vector<Vec2> pts, tans;
  for (int i : order) {
    if (!pts.empty() && (inner_[i] - pts.back()).norm() < 1e-10) continue;
    pts.push_back(inner_[i]);
    tans.push_back(inner_tan_[i]);
  }
  if (!pts.empty() && pts.size() > 1 && (pts.front() - pts.back()).norm() < 1e-10) {
    pts.pop_back();
    tans.pop_back();
  }

  // Convexity sweep: drop points making non-left turns (numerical stragglers);
  // a macroscopic violation means the representation is not convex-divisible.
  size_t dropped = 0;
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    std::vector<Vec2> np;
    std::vector<Vec2> nt;
    const size_t m = pts.size();
    for (size_t i = 0; i < m; ++i) {
      const Vec2& prev = pts[(i + m - 1) % m];
      const Vec2& cur = pts[i];
      const Vec2& next = pts[(i + 1) % m];
      double c = cross2(cur - prev, next - cur);
      if (c <= 1e-14) {
        if (c < -1e-6) fail("inconsistent-representation", "boundary points are not in convex position");
        ++dropped;
        changed = true;
        continue;
      }
      np.push_back(cur);
      nt.push_back(tans[i]);
    }
    pts = std::move(np);
    tans = std::move(nt);
  }
  if (pts.size() < 20 || dropped > n_raw / 20)
    fail("inconsistent-representation", "too many boundary points off the convex hull");

  // Supporting-line check: each tangent keeps every hull point on one side.
  std::vector<Vec2> spts, stans;
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec2 n(-tans[i](1), tans[i](0));
    if (n.dot(Vec2::Zero() - pts[i]) < 0) n = -n;  // inward normal
    double worst = 0.0;
    for (const auto& p : pts) worst = std::min(worst, n.dot(p - pts[i]));
    if (worst < -1e-6)
      fail("inconsistent-representation", "tangent line cuts through the hull");
    if (worst < -1e-9) continue;  // numerically unreliable support line, drop it
    spts.push_back(pts[i]);
    stans.push_back(tans[i]);
  }
  if (spts.size() < 20)
    fail("inconsistent-representation", "too few reliable support lines");
  inner_ = spts;
  inner_tan_ = stans;

  // Outer polygon: intersections of consecutive tangent lines.
  const size_t m = inner_.size();
  std::vector<Vec2> outer;
  for (size_t i = 0; i < m; ++i) {
    size_t j = (i + 1) % m;
    double den = cross2(inner_tan_[i], inner_tan_[j]);
    if (std::abs(den) < 1e-10) {
      outer.push_back(0.5 * (inner_[i] + inner_[j]));  // near-parallel tangents
      continue;
    }
    double t = cross2(inner_[j] - inner_[i], inner_tan_[j]) / den;
    outer.push_back(inner_[i] + t * inner_tan_[i]);
  }
  // Prune any locally inverted vertices (cutting such corners only shrinks the
  // polygon by the vertex noise, which the gap absorbs).
  changed = true;
  while (changed && outer.size() >= 3) {
    changed = false;
    std::vector<Vec2> no;
    const size_t k = outer.size();
    for (size_t i = 0; i < k; ++i) {
      const Vec2& prev = outer[(i + k - 1) % k];
      const Vec2& cur = outer[i];
      const Vec2& next = outer[(i + 1) % k];
      if (cross2(cur - prev, next - cur) <= 0.0) {
        changed = true;
        continue;
      }
      no.push_back(cur);
    }
    outer = std::move(no);
  }
  if (outer.size() < 3) fail("inconsistent-representation", "outer polygon collapsed");
  outer_ = outer;

  // Rotate both polygons so the vertex angles about the origin are increasing
  // (required by the binary searches in the query path).
  auto angles_of = [](const std::vector<Vec2>& poly) {
    std::vector<double> a(poly.size());
    for (size_t i = 0; i < poly.size(); ++i) a[i] = std::atan2(poly[i](1), poly[i](0));
    return a;
  };
  inner_angle_ = angles_of(inner_);
  size_t imin = std::min_element(inner_angle_.begin(), inner_angle_.end()) - inner_angle_.begin();
  std::rotate(inner_.begin(), inner_.begin() + imin, inner_.end());
  std::rotate(inner_tan_.begin(), inner_tan_.begin() + imin, inner_tan_.end());
  std::rotate(inner_angle_.begin(), inner_angle_.begin() + imin, inner_angle_.end());

  outer_angle_ = angles_of(outer_);
  imin = std::min_element(outer_angle_.begin(), outer_angle_.end()) - outer_angle_.begin();
  std::rotate(outer_.begin(), outer_.begin() + imin, outer_.end());
  std::rotate(outer_angle_.begin(), outer_angle_.begin() + imin, outer_angle_.end());

  // Certified width of the sandwich: the outer vertices are its extreme
  // points, so the gap is their largest distance to the inner hull boundary.
  double g = 0.0;
  const size_t mi = inner_.size();
  for (const auto& w : outer_) {
    double th = std::atan2(w(1), w(0));
    if (th < inner_angle_.front()) th += kTwoPi;
    auto it = std::upper_bound(inner_angle_.begin(), inner_angle_.end(), th);
    int i = (static_cast<int>(it - inner_angle_.begin()) - 1 + static_cast<int>(mi)) %
            static_cast<int>(mi);
    double d = std::numeric_limits<double>::infinity();
    for (int k = -2; k <= 2; ++k) {
      int j = (i + k + static_cast<int>(mi)) % static_cast<int>(mi);
      d = std::min(d, point_segment_distance(w, inner_[j], inner_[(j + 1) % mi]));
    }
    g = std::max(g, d);
  }
  gap_ = g;
}

ConvexDomain limit_domain(const Representation& rep, int L) {
  auto ball = word_ball(rep, L, /*even_only=*/true);

  std::vector<Vec3> fixed_pts;
  std::vector<Vec3> tangents;  // covectors, unoriented
  for (const auto& g : ball) {
    if (g.word.empty()) continue;
    try {
      EigenData ed = eigen_data(g);
      fixed_pts.push_back(ed.fix_plus.v);
      tangents.push_back(ed.tangent.c);
    } catch (const Error&) {
    }
  }
  if (fixed_pts.size() < 20)
    fail("insufficient-data",
         "only " + std::to_string(fixed_pts.size()) + " proximal elements in the ball");

  // Interior direction: Perron vector of the sum of the ball matrices (each
  // maps the invariant cone into itself, so their sum has its dominant
  // eigenvector inside the cone).
  Mat3 S = Mat3::Zero();
  for (const auto& g : ball) S += g.matrix / std::cbrt(std::abs(g.matrix.determinant()));
  Eigen::EigenSolver<Mat3> es(S);
  int dom_i = 0;
  double best = -1;
  for (int i = 0; i < 3; ++i) {
    double a = std::abs(es.eigenvalues()(i));
    if (std::abs(es.eigenvalues()(i).imag()) < 1e-9 * a && a > best) {
      best = a;
      dom_i = i;
    }
  }
  Vec3 x0 = es.eigenvectors().col(dom_i).real();
  x0.normalize();

  // Orient tangent covectors against the interior point, then build a strictly
  // interior dual vector and orient the fixed-point lifts with it.
  Vec3 psi = Vec3::Zero();
  for (auto& t : tangents) {
    t.normalize();
    if (t.dot(x0) < 0) t = -t;
    psi += t;
  }
  psi.normalize();
  for (auto& v : fixed_pts) {
    v.normalize();
    double s = psi.dot(v);
    if (std::abs(s) < 1e-12)
      fail("inconsistent-representation", "fixed point on the reference plane");
    if (s < 0) v = -v;
  }

  // Chart: reference covector as the plane at infinity, orthonormal complement
  // as the affine axes; then recenter/rescale so the hull sits in radius 0.8.
  Mat3 C1;
  Vec3 b1 = psi.unitOrthogonal();
  Vec3 b2 = psi.cross(b1);
  C1.row(0) = b1.transpose();
  C1.row(1) = b2.transpose();
  C1.row(2) = psi.transpose();
  AffineChart chart1(C1);

  std::vector<Vec2> raw;
  raw.reserve(fixed_pts.size());
  Vec2 bary = Vec2::Zero();
  for (const auto& v : fixed_pts) {
    Vec2 u = chart1.project(ProjPoint(v));
    raw.push_back(u);
    bary += u;
  }
  bary /= double(raw.size());
  double rmax = 0.0;
  for (const auto& u : raw) rmax = std::max(rmax, (u - bary).norm());
  if (rmax <= 0.0) fail("inconsistent-representation", "degenerate limit set");
  double s = 0.8 / rmax;
  Mat3 T = Mat3::Identity();
  T(0, 0) = T(1, 1) = s;
  T(0, 2) = -s * bary(0);
  T(1, 2) = -s * bary(1);
  AffineChart chart(T * C1);

  std::vector<Vec2> pts;
  std::vector<Vec2> dirs;
  const Mat3 Cit = chart.inverse_matrix().transpose();
  for (size_t i = 0; i < fixed_pts.size(); ++i) {
    pts.push_back(chart.project(ProjPoint(fixed_pts[i])));
    Vec3 l = Cit * tangents[i];
    Vec2 d(-l(1), l(0));
    double n = d.norm();
    if (n < 1e-14) fail("inconsistent-representation", "tangent line through chart infinity");
    dirs.push_back(d / n);
  }
  return ConvexDomain::sandwich(std::move(pts), std::move(dirs), chart);
}

void save_domain(const std::string& path, const ConvexDomain& dom) {
  std::ofstream f(path);
  if (!f) fail("format", "cannot open " + path + " for writing");
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  f << "hilb-domain 1\n";
  f << "chart";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) f << " " << num(dom.chart().matrix()(i, j));
  f << "\n";
  if (dom.kind() == ConvexDomain::Kind::Conic) {
    f << "kind conic\nQ";
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f << " " << num(dom.conic_form()(i, j));
    f << "\n";
  } else {
    f << "kind sandwich\n";
    f << "gap " << num(dom.gap()) << "\n";
    f << "support " << dom.inner_points().size() << "\n";
    for (size_t i = 0; i < dom.inner_points().size(); ++i) {
      f << num(dom.inner_points()[i](0)) << " " << num(dom.inner_points()[i](1)) << " "
        << num(dom.inner_tangent_dirs()[i](0)) << " " << num(dom.inner_tangent_dirs()[i](1))
        << "\n";
    }
  }
}

ConvexDomain load_domain(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("format", "cannot open " + path);
  std::string tag, key;
  int version;
  f >> tag >> version;
  if (tag != "hilb-domain") fail("format", "not a domain file: " + path);
  Mat3 C;
  f >> key;
  if (key != "chart") fail("format", "missing 'chart' record");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) f >> C(i, j);
  AffineChart chart(C);
  std::string kind;
  f >> key >> kind;
  if (key != "kind") fail("format", "missing 'kind' record");
  if (kind == "conic") {
    Mat3 Qc;
    f >> key;
    if (key != "Q") fail("format", "missing 'Q' record");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f >> Qc(i, j);
    if (!f) fail("format", "truncated domain file");
    // Qc was stored in chart coordinates; pull back to homogeneous form.
    Mat3 Q = chart.matrix().transpose() * Qc * chart.matrix();
    return ConvexDomain::conic(Q, chart);
  }
  if (kind != "sandwich") fail("format", "unknown domain kind: " + kind);
  double gap;
  size_t n;
  f >> key >> gap;
  if (key != "gap") fail("format", "missing 'gap' record");
  f >> key >> n;
  if (key != "support") fail("format", "missing 'support' record");
  std::vector<Vec2> pts(n), dirs(n);
  for (size_t i = 0; i < n; ++i) f >> pts[i](0) >> pts[i](1) >> dirs[i](0) >> dirs[i](1);
  if (!f) fail("format", "truncated domain file");
  return ConvexDomain::sandwich(std::move(pts), std::move(dirs), chart);
}

}  // namespace hilb
