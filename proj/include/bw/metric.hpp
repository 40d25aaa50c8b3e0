#pragma once

// Bures-Wasserstein geometry on PSD matrices: the distance between centred
// Gaussians N(0,F), N(0,G), the linear optimal transport map between them,
// and the tangent-space log/exp built on that map.

#include "bw/psd.hpp"

namespace bw {

/// Linear optimal map pushing N(0, source) forward to N(0, target).
struct TransportMap {
  PsdMatrix source;
  PsdMatrix target;
  PsdMatrix matrix;
};

/// V = T - I at a base point.
struct TangentVector {
  PsdMatrix base;
  SymMatrix value;
};

/// sqrt(tr F + tr G - 2 tr (G^{1/2} F G^{1/2})^{1/2}), clamped at zero.
double bw_distance(const PsdMatrix& f, const PsdMatrix& g, double rank_tol = kDefaultRankTol);

/// min over orthogonal U of ||F^{1/2} - G^{1/2} U||_HS, evaluated at the
/// closed-form aligner U = Q P^T from the SVD F^{1/2} G^{1/2} = P S Q^T.
/// The residual is formed entrywise, so unlike the trace formula it does not
/// lose precision when the distance is small relative to the traces.
double bw_distance_procrustes(const PsdMatrix& f, const PsdMatrix& g,
                              double rank_tol = kDefaultRankTol);

/// F^{-1/2} (F^{1/2} G F^{1/2})^{1/2} F^{-1/2} with the pseudo-inverse root.
/// Throws KernelMismatchError unless ker(F) is contained in ker(G), checked as
/// ||P_ker(F) G P_ker(F)||_op <= rank_tol * ||G||_op.
TransportMap optimal_map(const PsdMatrix& f, const PsdMatrix& g, double rank_tol = kDefaultRankTol);

/// ||(T - I) F^{1/2}||_HS for T = optimal_map(F, G).
double bw_distance_via_map(const PsdMatrix& f, const PsdMatrix& g,
                           double rank_tol = kDefaultRankTol);

TangentVector log_map(const PsdMatrix& base, const PsdMatrix& target,
                      double rank_tol = kDefaultRankTol);

/// (I + V) base (I + V). Throws InputError if I + V is not PSD.
PsdMatrix exp_map(const PsdMatrix& base, const SymMatrix& v);
PsdMatrix exp_map(const TangentVector& v);

/// ||base^{1/2} V||_HS.
double tangent_norm(const PsdMatrix& base, const SymMatrix& v);

/// The topology-comparison quantities for a pair (F, G):
///   sqrt_gap    = ||F^{1/2} - G^{1/2}||_HS^2
///   trace_gap   = ||F - G||_1
///   trace_bound = (tr(F)^{1/2} + tr(G)^{1/2}) * distance
///   distance    = Pi(F, G)
/// Theory guarantees sqrt_gap <= trace_gap <= trace_bound and
/// distance^2 <= sqrt_gap.
struct Lemma1Bounds {
  double sqrt_gap = 0.0;
  double trace_gap = 0.0;
  double trace_bound = 0.0;
  double distance = 0.0;

  bool holds(double slack) const;
};

Lemma1Bounds lemma1_bounds(const PsdMatrix& f, const PsdMatrix& g);
/// Same, with the distance supplied by the caller.
Lemma1Bounds lemma1_bounds(const PsdMatrix& f, const PsdMatrix& g, double distance);

}  // namespace bw
