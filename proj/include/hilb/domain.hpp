#pragma once

#include <string>
#include <vector>

#include "hilb/holonomy.hpp"
#include "hilb/projgeom.hpp"

namespace hilb {

// Boundary intersections of an oriented line through an interior point.
struct ChordHit {
  Vec2 p_minus;     // hit in direction -v
  Vec2 p_plus;      // hit in direction +v
  double residual;  // position uncertainty (0 for conics, gap for sandwiches)
};

// Strictly convex projective domain, bounded in its chart.  Either an exact
// conic (quadratic form of signature (2,1), interior = Q < 0 in chart
// coordinates) or a certified sandwich built from a holonomy representation:
// inner hull of boundary fixed points, outer polygon cut by their exact
// tangent lines, with the true boundary pinched in between.
class ConvexDomain {
 public:
  enum class Kind { Conic, Sandwich };

  Kind kind() const { return kind_; }
  const AffineChart& chart() const { return chart_; }
  double gap() const { return gap_; }

  // Conic data (chart coordinates): x^T Qc x < 0 inside, x homogeneous (u,v,1).
  const Mat3& conic_form() const { return Qc_; }

  // Sandwich data (chart coordinates, CCW, origin interior).
  const std::vector<Vec2>& inner_points() const { return inner_; }
  const std::vector<Vec2>& inner_tangent_dirs() const { return inner_tan_; }
  const std::vector<Vec2>& outer_vertices() const { return outer_; }

  bool contains(const Vec2& x) const;  // strictly inside (inner hull for sandwich)
  ChordHit ray_boundary(const Vec2& x, const Vec2& v) const;
  double hilbert_distance(const Vec2& x, const Vec2& y) const;
  // Upper bound on the distance error induced by the sandwich gap.
  double distance_uncertainty(const Vec2& x, const Vec2& y) const;
  double finsler_norm(const Vec2& x, const Vec2& v) const;

  static ConvexDomain conic(const Mat3& Q);                            // auto chart, radius 0.8
  static ConvexDomain conic(const Mat3& Q, const AffineChart& chart);  // explicit chart
  static ConvexDomain sandwich(std::vector<Vec2> points, std::vector<Vec2> tangent_dirs,
                               const AffineChart& chart);

 private:
  Kind kind_ = Kind::Conic;
  AffineChart chart_;
  Mat3 Qc_ = Mat3::Zero();
  std::vector<Vec2> inner_, inner_tan_, outer_;
  std::vector<double> inner_angle_, outer_angle_;  // about the origin
  double gap_ = 0.0;

  void finalize_sandwich();
  bool inside_polygon(const std::vector<Vec2>& poly, const std::vector<double>& angles,
                      const Vec2& x) const;
};

inline ConvexDomain conic_domain(const Mat3& Q) { return ConvexDomain::conic(Q); }
inline ConvexDomain conic_domain(const Mat3& Q, const AffineChart& c) {
  return ConvexDomain::conic(Q, c);
}

// Reconstruct the domain divided by rep from the attracting fixed points and
// tangent lines of the proximal elements of its even word ball of radius L.
ConvexDomain limit_domain(const Representation& rep, int L);

void save_domain(const std::string& path, const ConvexDomain& dom);
ConvexDomain load_domain(const std::string& path);

}  // namespace hilb
