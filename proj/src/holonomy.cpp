#include "hilb/holonomy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace hilb {

namespace detail {

std::array<double, 3> real_eigenvalues_sorted(const Mat3& m) {
  // Characteristic polynomial of a det-1 matrix: l^3 - t l^2 + s l - 1.
  const double t = m.trace();
  const double s = 0.5 * (t * t - (m * m).trace());
  const double d = m.determinant();

  const double a = t / 3.0;
  const double p = s - t * t / 3.0;
  const double q = -2.0 * t * t * t / 27.0 + s * t / 3.0 - d;
  const double scale = 1.0 + t * t + std::abs(s);

  if (p >= -1e-13 * scale) {
    // Triple or near-multiple root; callers reject it through the gap check.
    if (std::abs(q) <= 1e-13 * scale * std::sqrt(scale))
      return {a, a, a};
    fail("non-proximal", "complex eigenvalue pair (characteristic cubic has one real root)");
  }

  double arg = 1.5 * q / p * std::sqrt(-3.0 / p);
  if (std::abs(arg) > 1.0 + 1e-9)
    fail("non-proximal", "complex eigenvalue pair");
  arg = std::clamp(arg, -1.0, 1.0);

  const double theta = std::acos(arg);
  const double rad = 2.0 * std::sqrt(-p / 3.0);
  std::array<double, 3> lam;
  for (int k = 0; k < 3; ++k)
    lam[k] = a + rad * std::cos((theta - 2.0 * std::numbers::pi * k) / 3.0);

  // Newton polish on the original cubic.
  for (double& l : lam) {
    for (int it = 0; it < 3; ++it) {
      double f = ((l - t) * l + s) * l - d;
      double fp = (3.0 * l - 2.0 * t) * l + s;
      if (fp == 0.0) break;
      l -= f / fp;
    }
  }
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return lam;
}

Vec3 eigenvector(const Mat3& m, double lambda) {
  Mat3 A = m - lambda * Mat3::Identity();
  Vec3 best = Vec3::Zero();
  double best_norm = -1.0;
  for (int i = 0; i < 3; ++i) {
    Vec3 c = A.row(i).cross(A.row((i + 1) % 3));
    double n = c.norm();
    if (n > best_norm) {
      best_norm = n;
      best = c;
    }
  }
  if (best_norm <= 0.0) fail("non-proximal", "eigenvector is not well defined");
  best /= best.norm();

  // One inverse-iteration step with a slightly shifted eigenvalue.
  double shift = lambda * (1.0 + 1e-11) + ((lambda == 0.0) ? 1e-300 : 0.0);
  Mat3 B = m - shift * Mat3::Identity();
  Eigen::PartialPivLU<Mat3> lu(B);
  Vec3 w = lu.solve(best);
  if (w.allFinite() && w.norm() > 0.0) {
    w /= w.norm();
    if ((m * w - lambda * w).norm() <= (m * best - lambda * best).norm()) best = w;
  }
  return best;
}

}  // namespace detail

Representation vinberg_triangle(int p, int q, int r, double tau) {
  if (p < 2 || q < 2 || r < 2) fail("not-hyperbolic", "Coxeter orders must be >= 2");
  if (1.0 / p + 1.0 / q + 1.0 / r >= 1.0 - 1e-12)
    fail("not-hyperbolic", "1/p + 1/q + 1/r >= 1: triangle is not hyperbolic");
  if (!std::isfinite(tau)) fail("not-hyperbolic", "tau must be finite");

  // Pairing magnitudes per edge: m_01 = p, m_12 = q, m_20 = r.
  Mat3 base = Mat3::Zero();
  auto put = [&](int i, int j, int m) {
    base(i, j) = base(j, i) = -2.0 * std::cos(std::numbers::pi / m);
  };
  put(0, 1, p);
  put(1, 2, q);
  put(2, 0, r);

  // Asymmetry split so that log of the triple ratio equals tau exactly while
  // keeping c_ij c_ji = 4 cos^2(pi/m_ij).
  const double f = std::exp(tau / 6.0);
  Mat3 c = Mat3::Zero();
  c(0, 1) = base(0, 1) * f;
  c(1, 2) = base(1, 2) * f;
  c(2, 0) = base(2, 0) * f;
  c(1, 0) = base(1, 0) / f;
  c(2, 1) = base(2, 1) / f;
  c(0, 2) = base(0, 2) / f;

  Representation rep;
  rep.coxeter_orders = {p, q, r};
  rep.tau = tau;
  for (int j = 0; j < 3; ++j) {
    Vec3 v = Vec3::Zero();
    v(j) = 2.0;
    for (int i = 0; i < 3; ++i)
      if (i != j) v(i) = c(i, j);
    Mat3 rho = Mat3::Identity() - v * Vec3::Unit(j).transpose();
    rep.generators.push_back(rho);
    rep.names.push_back("r" + std::to_string(j + 1));
  }
  if (coxeter_residual(rep) > 1e-10)
    fail("not-hyperbolic", "Coxeter relations fail for the constructed generators");
  return rep;
}

double coxeter_residual(const Representation& rep) {
  if (rep.generators.size() != 3) fail("format", "expected three generators");
  double worst = 0.0;
  auto proj_dist_to_id = [](const Mat3& P) {
    double c = P.trace() / 3.0;
    if (std::abs(c) < 1e-300) return 1.0;
    return ((P / c) - Mat3::Identity()).cwiseAbs().maxCoeff();
  };
  for (int i = 0; i < 3; ++i)
    worst = std::max(worst, proj_dist_to_id(rep.generators[i] * rep.generators[i]));
  const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int e = 0; e < 3; ++e) {
    int m = rep.coxeter_orders[e];
    if (m <= 0) continue;
    Mat3 rot = rep.generators[pairs[e][0]] * rep.generators[pairs[e][1]];
    Mat3 P = Mat3::Identity();
    for (int k = 0; k < m; ++k) P = P * rot;
    worst = std::max(worst, proj_dist_to_id(P));
  }
  return worst;
}

InvariantForm symmetric_invariant_form(const Representation& rep) {
  // Linear system on the 6 entries of symmetric J: g^T J g - J = 0.
  const int idx[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  Eigen::MatrixXd A(9 * static_cast<int>(rep.generators.size()), 6);
  for (size_t gi = 0; gi < rep.generators.size(); ++gi) {
    const Mat3& g = rep.generators[gi];
    for (int k = 0; k < 6; ++k) {
      Mat3 E = Mat3::Zero();
      E(idx[k][0], idx[k][1]) = E(idx[k][1], idx[k][0]) = 1.0;
      Mat3 R = g.transpose() * E * g - E;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(9 * gi + 3 * i + j, k) = R(i, j);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  Eigen::VectorXd j = svd.matrixV().col(5);
  Mat3 J;
  for (int k = 0; k < 6; ++k) J(idx[k][0], idx[k][1]) = J(idx[k][1], idx[k][0]) = j(k);
  // Orient to signature (2,1).
  Eigen::SelfAdjointEigenSolver<Mat3> es(J);
  int npos = 0;
  for (int i = 0; i < 3; ++i)
    if (es.eigenvalues()(i) > 0) ++npos;
  if (npos == 1) J = -J;
  return {J, svd.singularValues()(5) / svd.singularValues()(0)};
}

namespace {

// Normalize to det +-1 and first significant entry positive, for dedup only.
Mat3 dedup_normalized(const Mat3& m) {
  double d = m.determinant();
  Mat3 n = m / std::cbrt(std::abs(d));
  double scale = n.cwiseAbs().maxCoeff();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (std::abs(n(i, j)) > 1e-6 * scale) return (n(i, j) > 0) ? n : Mat3(-n);
    }
  return n;
}

}  // namespace

std::vector<GroupElement> word_ball(const Representation& rep, int L, bool even_only) {
  if (L < 1) fail("usage", "word ball radius must be >= 1");
  const int ngen = static_cast<int>(rep.generators.size());

  std::vector<GroupElement> elements;
  std::vector<Mat3> norms;
  std::unordered_map<long long, std::vector<int>> buckets;

  auto lookup = [&](const Mat3& n) -> bool {
    long long key = llround(n.trace() * 1024.0);
    for (long long k = key - 1; k <= key + 1; ++k) {
      auto it = buckets.find(k);
      if (it == buckets.end()) continue;
      for (int i : it->second)
        if ((norms[i] - n).cwiseAbs().maxCoeff() <=
            1e-8 * std::max(1.0, n.cwiseAbs().maxCoeff()))
          return true;
    }
    return false;
  };
  auto insert = [&](const Mat3& raw, std::vector<int> word) {
    Mat3 n = dedup_normalized(raw);
    if (lookup(n)) return false;
    norms.push_back(n);
    buckets[llround(n.trace() * 1024.0)].push_back(static_cast<int>(norms.size()) - 1);
    elements.push_back({raw, std::move(word)});
    return true;
  };

  insert(Mat3::Identity(), {});
  std::vector<int> frontier{0};
  for (int len = 1; len <= L; ++len) {
    std::vector<int> next;
    for (int ei : frontier) {
      GroupElement cur = elements[ei];  // copy: elements reallocates below
      for (int g = 0; g < ngen; ++g) {
        if (!cur.word.empty() && cur.word.back() == g) continue;  // reflections are involutions
        std::vector<int> w = cur.word;
        w.push_back(g);
        if (insert(cur.matrix * rep.generators[g], std::move(w)))
          next.push_back(static_cast<int>(elements.size()) - 1);
      }
    }
    frontier = std::move(next);
  }

  if (even_only) {
    std::vector<GroupElement> out;
    for (auto& e : elements)
      if (e.length() % 2 == 0) out.push_back(std::move(e));
    return out;
  }
  return elements;
}

EigenData eigen_data(const Mat3& m) {
  double d = m.determinant();
  if (d <= 0.0)
    fail("non-proximal", "determinant is not positive (odd word?)");
  Mat3 M = m / std::cbrt(d);

  auto lam = detail::real_eigenvalues_sorted(M);
  if (lam[2] <= 0.0)
    fail("non-proximal", "spectrum is not positive");
  double gap = std::min(lam[0] / lam[1], lam[1] / lam[2]);
  if (gap < 1.0 + 1e-6)
    fail("non-proximal", "spectral gap " + std::to_string(gap) + " below threshold");

  // Two-sided Rayleigh quotient polish: the cubic coefficients lose accuracy
  // to cancellation for ill-conditioned elements, the quotient does not.
  for (double& l : lam) {
    for (int it = 0; it < 2; ++it) {
      Vec3 v = detail::eigenvector(M, l);
      Vec3 u = detail::eigenvector(Mat3(M.transpose()), l);
      double den = u.dot(v);
      if (std::abs(den) <= 1e-12 * u.norm() * v.norm()) break;
      double nl = u.dot(M * v) / den;
      if (!std::isfinite(nl)) break;
      l = nl;
    }
  }
  std::sort(lam.begin(), lam.end(), std::greater<>());

  EigenData ed;
  ed.lambda1 = lam[0];
  ed.lambda2 = lam[1];
  ed.lambda3 = lam[2];
  Vec3 v1 = detail::eigenvector(M, lam[0]);
  Vec3 v2 = detail::eigenvector(M, lam[1]);
  Vec3 v3 = detail::eigenvector(M, lam[2]);
  ed.fix_plus = ProjPoint(v1);
  ed.fix_minus = ProjPoint(v3);
  ed.tangent = ProjLine(v1.cross(v2));
  double l13 = std::log(lam[0] / lam[2]);
  double l12 = std::log(lam[0] / lam[1]);
  ed.ell = 0.5 * l13;
  ed.eta = -1.0 + 2.0 * l12 / l13;
  ed.alpha = l13 / l12;
  return ed;
}

Census conjugacy_census(const Representation& rep, int L) {
  if (L < 2) fail("usage", "census needs L >= 2");
  // Conjugacy is decided group-theoretically, not by traces: at symmetric
  // points of the family the length spectrum has large multiplicities and
  // trace keys would merge distinct geodesics.  Elements are linked by
  // single-generator conjugation inside a radius L+2 ball, which contains
  // every intermediate of a cyclic-reduction path between ball-L conjugates.
  auto ball = word_ball(rep, L + 2, /*even_only=*/false);
  const size_t n = ball.size();
  const int ngen = static_cast<int>(rep.generators.size());

  std::vector<Mat3> norms(n);
  std::unordered_map<long long, std::vector<int>> buckets;
  for (size_t i = 0; i < n; ++i) {
    norms[i] = dedup_normalized(ball[i].matrix);
    buckets[llround(norms[i].trace() * 1024.0)].push_back(static_cast<int>(i));
  }
  auto find_element = [&](const Mat3& raw) -> int {
    Mat3 m = dedup_normalized(raw);
    long long key = llround(m.trace() * 1024.0);
    for (long long k = key - 1; k <= key + 1; ++k) {
      auto it = buckets.find(k);
      if (it == buckets.end()) continue;
      for (int i : it->second)
        if ((norms[i] - m).cwiseAbs().maxCoeff() <=
            1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff()))
          return i;
    }
    return -1;
  };

  std::vector<int> parent(n);
  for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find_root = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<Mat3> gen_inv(ngen);
  for (int a = 0; a < ngen; ++a) gen_inv[a] = rep.generators[a].inverse();
  for (size_t i = 0; i < n; ++i) {
    for (int a = 0; a < ngen; ++a) {
      int j = find_element(rep.generators[a] * ball[i].matrix * gen_inv[a]);
      if (j >= 0) {
        int ri = find_root(static_cast<int>(i)), rj = find_root(j);
        if (ri != rj) parent[ri] = rj;
      }
    }
  }

  // One class per component, restricted to the even non-identity members of
  // the radius-L ball; the shortest member represents the closed geodesic.
  std::unordered_map<int, std::vector<int>> comps;
  for (size_t i = 0; i < n; ++i) {
    const auto& g = ball[i];
    if (g.word.empty() || g.length() % 2 != 0 || g.length() > L) continue;
    comps[find_root(static_cast<int>(i))].push_back(static_cast<int>(i));
  }

  Census census;
  std::vector<int> roots;
  for (auto& [root, members] : comps) roots.push_back(root);
  std::sort(roots.begin(), roots.end());
  for (int root : roots) {
    auto& members = comps[root];
    int best = members[0];
    for (int i : members) {
      if (ball[i].length() < ball[best].length() ||
          (ball[i].length() == ball[best].length() && ball[i].word < ball[best].word))
        best = i;
    }
    try {
      ConjClass c;
      c.data = eigen_data(ball[best]);
      Mat3 M = ball[best].matrix / std::cbrt(ball[best].matrix.determinant());
      c.tr = M.trace();
      c.tr_inv = M.inverse().trace();
      c.representative = ball[best];
      c.multiplicity = static_cast<int>(members.size());
      census.classes.push_back(std::move(c));
    } catch (const Error&) {
      census.skipped_nonproximal += static_cast<int>(members.size());
    }
  }

  // Primitivity: ell divisibility with trace-of-power confirmation.
  std::sort(census.classes.begin(), census.classes.end(),
            [](const ConjClass& a, const ConjClass& b) { return a.data.ell < b.data.ell; });
  if (!census.classes.empty()) {
    double ell_min = census.classes.front().data.ell;
    for (auto& c : census.classes) {
      int kmax = static_cast<int>(c.data.ell / ell_min + 1e-6);
      for (int k = 2; k <= kmax && c.primitive; ++k) {
        double target = c.data.ell / k;
        for (const auto& root : census.classes) {
          if (root.data.ell > target + 1e-6 * (1.0 + target)) break;
          if (std::abs(root.data.ell - target) > 1e-6 * (1.0 + target)) continue;
          Mat3 P = Mat3::Identity();
          Mat3 R = root.representative.matrix / std::cbrt(root.representative.matrix.determinant());
          for (int s = 0; s < k; ++s) P = P * R;
          if (std::abs(P.trace() - c.tr) <= 1e-6 * (1.0 + std::abs(c.tr))) {
            c.primitive = false;
            break;
          }
        }
      }
    }
  }
  return census;
}

void save_representation(const std::string& path, const Representation& rep) {
  std::ofstream f(path);
  if (!f) fail("format", "cannot open " + path + " for writing");
  f << "hilb-representation 1\n";
  f << "orders " << rep.coxeter_orders[0] << " " << rep.coxeter_orders[1] << " "
    << rep.coxeter_orders[2] << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", rep.tau);
  f << "tau " << buf << "\n";
  f << "generators " << rep.generators.size() << "\n";
  for (size_t g = 0; g < rep.generators.size(); ++g) {
    f << "generator " << (g < rep.names.size() ? rep.names[g] : "g" + std::to_string(g)) << "\n";
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", rep.generators[g](i, j));
        f << buf << (j < 2 ? " " : "\n");
      }
    }
  }
}

Representation load_representation(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("format", "cannot open " + path);
  std::string tag;
  int version;
  f >> tag >> version;
  if (tag != "hilb-representation") fail("format", "not a representation file: " + path);
  Representation rep;
  std::string key;
  f >> key >> rep.coxeter_orders[0] >> rep.coxeter_orders[1] >> rep.coxeter_orders[2];
  if (key != "orders") fail("format", "missing 'orders' record");
  f >> key >> rep.tau;
  if (key != "tau") fail("format", "missing 'tau' record");
  size_t n;
  f >> key >> n;
  if (key != "generators") fail("format", "missing 'generators' record");
  for (size_t g = 0; g < n; ++g) {
    std::string name;
    f >> key >> name;
    if (key != "generator") fail("format", "missing 'generator' record");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f >> m(i, j);
    rep.generators.push_back(m);
    rep.names.push_back(name);
  }
  if (!f) fail("format", "truncated representation file: " + path);
  bool orders_known = rep.coxeter_orders[0] > 0 && rep.coxeter_orders[1] > 0 &&
                      rep.coxeter_orders[2] > 0 && rep.generators.size() == 3;
  rep.verified = orders_known && coxeter_residual(rep) <= 1e-8;
  return rep;
}

}  // namespace hilb
