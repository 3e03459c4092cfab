#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hilb/domain.hpp"

namespace hilb {

// Point of the homogenized tangent bundle: interior chart point, unit chart
// direction, and the cached boundary chord through them.
struct FlowPoint {
  Vec2 x;
  Vec2 dir;
  ChordHit chord;
};

FlowPoint make_flow_point(const ConvexDomain& dom, const Vec2& x, const Vec2& dir);

// Exact time-t geodesic flow: the affine ratio u = |x-p^-|/|x-p^+| is scaled
// by e^{2t} and the point rebuilt on the chord, so d(x, x') = |t| identically.
FlowPoint geodesic_flow(const ConvexDomain& dom, const FlowPoint& w, double t);

// Direction reversal sigma(x,[v]) = (x,[-v]); exact involution.
FlowPoint flip(const FlowPoint& w);

struct CocycleConfig {
  double eps = 1e-6;     // relative perturbation size
  double delta = 1.0;    // renormalization interval (Hilbert time)
  double T = 2000.0;     // total Hilbert time
  double R = 0.0;        // recenter radius; 0 = derive from the representation
  std::uint64_t seed = 1;
};

// Deck-transformation search state for Dirichlet-style recentering.
struct RecenterContext {
  std::vector<GroupElement> greedy_moves;  // rotation generators and inverses
  std::vector<GroupElement> deep_moves;    // even ball of radius 6
  int last_move = -1;                      // greedy seed: index into greedy_moves
};

RecenterContext make_recenter_context(const Representation& rep);

// Half the orbit diameter of the chart origin under the rotation generators;
// any recenter radius must exceed this.
double dirichlet_radius_estimate(const ConvexDomain& dom, const Representation& rep);

// Move base (and companions) by a deck transformation bringing the base point
// within Hilbert distance R of the chart origin.  Returns the word applied
// (empty = no-op).  All mutual Hilbert distances are preserved (isometry).
std::vector<int> recenter(const ConvexDomain& dom, RecenterContext& ctx, double R,
                          FlowPoint& base, std::span<FlowPoint> companions);

struct LyapunovEstimate {
  double chi_plus = 0;   // leading exponent per unit Hilbert time
  double chi_minus = 0;  // contracting exponent
  double chi_mid = 0;    // flow-direction diagnostic, should be ~0
  double vol_rate = 0;   // log-determinant rate (sum of the three)
  double stderr_ = 0;    // batch-means standard error of chi_plus
  double T_used = 0;
  int renorm_count = 0;
  int delta_halvings = 0;
  bool non_convergent = false;
};

LyapunovEstimate lyapunov_spectrum(const ConvexDomain& dom, const Representation& rep,
                                   const FlowPoint& w0, const CocycleConfig& cfg);

// Same trajectory measured under the unit-Euclidean-speed reparametrization
// psi.  beta = F(x, z) for Euclidean-unit z; Pesin turns Abramov's entropy
// relation into chi+_psi = chi+_phi * <beta>_psi, whose residual is reported.
struct AbramovRecord {
  double mean_beta = 0;
  double chi_plus_psi = 0;
  double chi_plus_phi = 0;
  double abramov_residual = 0;
  double stderr_ = 0;
  bool non_convergent = false;
};

AbramovRecord beta_and_abramov(const ConvexDomain& dom, const Representation& rep,
                               const FlowPoint& w0, const CocycleConfig& cfg);

// Lebesgue-class initial condition: uniform chart position near the origin,
// uniform direction; deterministic in the seed.
FlowPoint sample_initial(const ConvexDomain& dom, std::uint64_t seed);

}  // namespace hilb
