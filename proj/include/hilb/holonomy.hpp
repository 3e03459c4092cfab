#pragma once

#include <array>
#include <string>
#include <vector>

#include "hilb/projgeom.hpp"

namespace hilb {

// Holonomy representation into PGL(3,R).  For the built-in Vinberg triangle
// family the three generators are reflections and the Coxeter orders record
// the orders of the pairwise products; tau is the deformation parameter
// (log of the triple ratio of the Cartan pairings), tau = 0 the Fuchsian point.
struct Representation {
  std::vector<Mat3> generators;
  std::vector<std::string> names;
  std::array<int, 3> coxeter_orders{0, 0, 0};
  double tau = 0.0;
  AffineChart chart_hint;
  bool verified = true;  // false for user-supplied generators with unchecked relations
};

// Reflection group of a hyperbolic triangle (1/p + 1/q + 1/r < 1) realized by
// rho_i = Id - v_i alpha_i^T with Cartan pairings c_ij c_ji = 4 cos^2(pi/m_ij).
// The one-parameter deformation places e^{tau/6} on the (1,2),(2,3),(3,1)
// pairings and e^{-tau/6} on their transposes, so that
// tau = log[(c12 c23 c31)/(c13 c21 c32)] exactly.
Representation vinberg_triangle(int p, int q, int r, double tau);

// Largest residual over all Coxeter relations (rho_i rho_j)^m = Id,
// entrywise after projective normalization.
double coxeter_residual(const Representation& rep);

// Least-squares symmetric bilinear form J with g^T J g = J for all generators;
// residual is sigma_min/sigma_max of the constraint system.  At tau = 0 the
// form has signature (2,1) and tiny residual.
struct InvariantForm {
  Mat3 J;
  double residual;
};
InvariantForm symmetric_invariant_form(const Representation& rep);

struct GroupElement {
  Mat3 matrix;            // exact ordered product of generator matrices
  std::vector<int> word;  // generator indices, shortest representative
  int length() const { return static_cast<int>(word.size()); }
};

// All reduced words of length <= L, deduplicated as group elements (entrywise
// 1e-8 after det- and sign-normalization); each element keeps a shortest
// representative word, output sorted by (length, lexicographic word).
std::vector<GroupElement> word_ball(const Representation& rep, int L, bool even_only);

// Spectral invariants of a proximal element with det +1 and positive spectrum
// lambda1 > lambda2 > lambda3, lambda1 lambda2 lambda3 = 1.
struct EigenData {
  double lambda1, lambda2, lambda3;
  ProjPoint fix_plus;   // attracting fixed point (lambda1 eigenvector)
  ProjPoint fix_minus;  // repelling fixed point (lambda3 eigenvector)
  ProjLine tangent;     // tangent line of the boundary at fix_plus: span of
                        // the lambda1 and lambda2 eigenvectors
  double ell;           // translation length 1/2 log(lambda1/lambda3)
  double eta;           // parallel exponent -1 + 2 log(l1/l2)/log(l1/l3)
  double alpha;         // boundary exponent log(l1/l3)/log(l1/l2)
};

EigenData eigen_data(const Mat3& m);
inline EigenData eigen_data(const GroupElement& g) { return eigen_data(g.matrix); }

// Proximal even elements of the L-ball grouped by (trace, inverse trace);
// classes stand for closed geodesics.
struct ConjClass {
  double tr, tr_inv;
  GroupElement representative;
  EigenData data;
  int multiplicity = 1;
  bool primitive = true;
};

struct Census {
  std::vector<ConjClass> classes;
  int skipped_nonproximal = 0;
};

Census conjugacy_census(const Representation& rep, int L);

// Structured-text import/export: three 3x3 matrices (row-major, 17 significant
// digits), Coxeter orders, tau.  Arbitrary generators load as "unverified".
void save_representation(const std::string& path, const Representation& rep);
Representation load_representation(const std::string& path);

namespace detail {
// Roots of the characteristic cubic of a 3x3 matrix, all-real case; solved in
// closed form then polished by Newton.  Throws "non-proximal" on a complex pair.
std::array<double, 3> real_eigenvalues_sorted(const Mat3& m);
// Eigenvector for a well-separated eigenvalue, cross-product construction plus
// one inverse-iteration step.
Vec3 eigenvector(const Mat3& m, double lambda);
}  // namespace detail

}  // namespace hilb
