#include "hilb/projgeom.hpp"

#include <cmath>

namespace hilb {

namespace {
constexpr double kCollinearTol = 1e-9;  // triple product after normalization
}

double cross_ratio(const AffineChart& chart, const ProjPoint& p, const ProjPoint& x,
                   const ProjPoint& y, const ProjPoint& q) {
  // Collinearity guard: downstream chord constructions are collinear by
  // construction, this only catches misuse.
  Mat3 T;
  T.col(0) = p.v;
  T.col(1) = x.v;
  T.col(2) = q.v;
  if (std::abs(T.determinant()) > kCollinearTol)
    fail("collinearity", "p, x, q are not collinear");
  T.col(1) = y.v;
  if (std::abs(T.determinant()) > kCollinearTol)
    fail("collinearity", "p, y, q are not collinear");

  if (proj_equal(p, x, 1e-13)) fail("degenerate-configuration", "p coincides with x");
  if (proj_equal(q, y, 1e-13)) fail("degenerate-configuration", "q coincides with y");

  Vec2 P = chart.project(p), X = chart.project(x), Y = chart.project(y), Q = chart.project(q);
  return ((P - Y).norm() * (Q - X).norm()) / ((P - X).norm() * (Q - Y).norm());
}

// High powers of proximal elements are legitimately ill conditioned, so no
// determinant threshold here: the map only fails when the image collapses.
ProjPoint apply_projective(const Mat3& M, const ProjPoint& p) {
  Vec3 w = M * p.v;
  if (w.cwiseAbs().maxCoeff() < 1e-14 * M.cwiseAbs().maxCoeff())
    fail("singular-matrix", "projective map collapses the point");
  return ProjPoint(w);
}

ProjLine apply_projective(const Mat3& M, const ProjLine& l) {
  // Inverse transpose up to scale = cofactor matrix; no division by det, so
  // nearly singular maps stay usable projectively.
  Mat3 cof;
  for (int i = 0; i < 3; ++i)
    cof.row(i) = M.row((i + 1) % 3).cross(M.row((i + 2) % 3));
  Vec3 w = cof * l.c;
  if (w.cwiseAbs().maxCoeff() < 1e-14 * cof.cwiseAbs().maxCoeff())
    fail("singular-matrix", "projective map collapses the line");
  return ProjLine(w);
}

}  // namespace hilb
