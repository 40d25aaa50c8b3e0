#pragma once

// Random covariance generators with known barycentres, plus the two
// constructive examples: the degenerate chi-square family and the
// map-instability sequence.

#include <vector>

#include "bw/psd.hpp"
#include "bw/rng.hpp"

namespace bw {

/// Template deformation Sigma = T Xi T with T = I + sum_k u_k B_k and
/// u_k ~ Uniform(-c_k, c_k). Since E[T] = I and T is symmetric positive
/// definite, Xi is the population barycentre and T the true optimal map.
struct DeformationSpec {
  PsdMatrix xi;
  std::vector<SymMatrix> directions;  // ||B_k||_op <= 1
  std::vector<double> amplitudes;     // c_k in [0, 1), sum < 1

  Index dim() const { return xi.dim(); }
  double total_amplitude() const;
  void validate() const;

  /// Xi = diag(1, 1/2, ..., 1/d); directions are the symmetric basis
  /// E_ii and E_ij + E_ji (all of operator norm 1) with equal amplitudes
  /// summing to total_amplitude.
  static DeformationSpec standard(Index d, double total_amplitude = 0.6);
};

struct DeformationDraw {
  PsdMatrix sigma;
  PsdMatrix map;  // T, the optimal map from Xi to sigma
};

DeformationDraw sample_template_deformation(const DeformationSpec& spec, SeededRng& rng);

/// (1/dof) sum_j x_j x_j^T with x_j ~ N(0, scale). Requires dof >= dim.
PsdMatrix sample_wishart(const PsdMatrix& scale, int dof, SeededRng& rng);

/// diag(W, 0) with W ~ chi^2_1.
PsdMatrix degenerate_chi2_example(SeededRng& rng);

/// Population barycentre of the chi-square family: diag(2/pi, 0).
PsdMatrix degenerate_chi2_barycenter();

/// Xi = diag(lambda_sq), Xi_n = a^2 E_n + b^2 Xi (a^2 = 1 - b^2, E_n the rank-n
/// truncation of Xi), for n = 1, ..., d-1.
struct InstabilityFamily {
  Index d = 0;
  double b = 0.0;
  std::vector<double> lambda_sq;
  PsdMatrix xi;
  std::vector<PsdMatrix> xi_n;  // xi_n[n-1] is Xi_n
  // Null threshold for the spectral routines on this family. The profile
  // spans many orders of magnitude, and optimal_map squares that range.
  double rank_tol = kDefaultRankTol;

  /// |1 - 1/b|.
  double expected_gap() const;
  /// (1 - b) * sqrt(sum_{j > n} lambda_j^2).
  double expected_distance(Index n) const;
};

InstabilityFamily instability_sequence(Index d, double b, std::vector<double> lambda_sq);
/// lambda_j^2 = 2^{-j}, j = 1..d.
std::vector<double> geometric_profile(Index d);

}  // namespace bw
