#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include "hilb/errors.hpp"

namespace hilb {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Point of the projective plane in homogeneous coordinates, normalized so the
// largest-magnitude entry is +-1.  Normalizing divides by the magnitude (not
// the signed value), which keeps signs stable near zero entries; projective
// equality is therefore equality up to a global sign.
struct ProjPoint {
  Vec3 v;

  ProjPoint() : v(0, 0, 1) {}
  explicit ProjPoint(const Vec3& w) : v(normalized(w)) {}
  ProjPoint(double a, double b, double c) : ProjPoint(Vec3(a, b, c)) {}

  static Vec3 normalized(const Vec3& w) {
    int i;
    double m = w.cwiseAbs().maxCoeff(&i);
    if (m == 0.0) fail("zero-vector", "homogeneous point has all-zero coordinates");
    (void)i;
    return w / m;
  }
};

// Line of the projective plane (dual coordinates), same normalization.
struct ProjLine {
  Vec3 c;

  ProjLine() : c(0, 0, 1) {}
  explicit ProjLine(const Vec3& w) : c(ProjPoint::normalized(w)) {}
  ProjLine(double a, double b, double d) : ProjLine(Vec3(a, b, d)) {}
};

inline double incidence(const ProjPoint& p, const ProjLine& l) { return p.v.dot(l.c); }

inline ProjLine line_through(const ProjPoint& p, const ProjPoint& q) {
  Vec3 c = p.v.cross(q.v);
  if (c.cwiseAbs().maxCoeff() < 1e-14) fail("degenerate-configuration", "line through coincident points");
  return ProjLine(c);
}

inline ProjPoint meet(const ProjLine& a, const ProjLine& b) {
  Vec3 p = a.c.cross(b.c);
  if (p.cwiseAbs().maxCoeff() < 1e-14) fail("degenerate-configuration", "meet of coincident lines");
  return ProjPoint(p);
}

// Equality up to global sign after normalization.
inline bool proj_equal(const ProjPoint& p, const ProjPoint& q, double tol = 1e-10) {
  return (p.v - q.v).cwiseAbs().maxCoeff() <= tol || (p.v + q.v).cwiseAbs().maxCoeff() <= tol;
}
inline bool proj_equal(const ProjLine& p, const ProjLine& q, double tol = 1e-10) {
  return (p.c - q.c).cwiseAbs().maxCoeff() <= tol || (p.c + q.c).cwiseAbs().maxCoeff() <= tol;
}

// Invertible chart matrix mapping the working region of the plane into the
// z = 1 affine plane.  All Euclidean quantities (cross-ratio distances,
// Finsler norms) are measured in the active chart.
class AffineChart {
 public:
  AffineChart() : C_(Mat3::Identity()), Cinv_(Mat3::Identity()) {}
  explicit AffineChart(const Mat3& C) : C_(C) {
    double d = C.determinant();
    if (std::abs(d) < 1e-300) fail("singular-matrix", "chart matrix is singular");
    Cinv_ = C.inverse();
  }

  const Mat3& matrix() const { return C_; }
  const Mat3& inverse_matrix() const { return Cinv_; }

  Vec2 project(const ProjPoint& p) const {
    Vec3 w = C_ * p.v;
    if (std::abs(w(2)) < 1e-13 * w.cwiseAbs().maxCoeff())
      fail("chart-overflow", "point maps to infinity in this chart");
    return Vec2(w(0) / w(2), w(1) / w(2));
  }

  ProjPoint lift(const Vec2& x) const { return ProjPoint(Cinv_ * Vec3(x(0), x(1), 1.0)); }

  // Homogeneous lift of a chart tangent direction.
  Vec3 lift_dir(const Vec2& v) const { return Cinv_ * Vec3(v(0), v(1), 0.0); }

  double condition() const {
    Eigen::JacobiSVD<Mat3> svd(C_);
    return svd.singularValues()(0) / svd.singularValues()(2);
  }

 private:
  Mat3 C_;
  Mat3 Cinv_;
};

// Cross-ratio of four collinear points, ordered p, x, y, q along the line:
// CR = (|p-y||q-x|)/(|p-x||q-y|) with Euclidean distances in the chart.
// Half its log is the Hilbert distance between x and y.
double cross_ratio(const AffineChart& chart, const ProjPoint& p, const ProjPoint& x,
                   const ProjPoint& y, const ProjPoint& q);

inline double cross_ratio(const ProjPoint& p, const ProjPoint& x, const ProjPoint& y,
                          const ProjPoint& q) {
  return cross_ratio(AffineChart(), p, x, y, q);
}

ProjPoint apply_projective(const Mat3& M, const ProjPoint& p);

// Dual action: lines transform by the inverse transpose.
ProjLine apply_projective(const Mat3& M, const ProjLine& l);

}  // namespace hilb
