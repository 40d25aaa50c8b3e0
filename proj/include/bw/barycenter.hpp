#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bw/metric.hpp"

namespace bw {

struct BarycenterConfig {
  double rtol = 1e-10;
  int max_iter = 500;
  double rank_tol = kDefaultRankTol;
  // Starting point; the arithmetic mean of the samples when empty.
  std::optional<PsdMatrix> init;

  void validate() const;
};

struct BarycenterResult {
  PsdMatrix barycenter;
  int iterations = 0;
  // Trace-norm residual of the empirical fixed-point equation at `barycenter`.
  double residual = 0.0;
  double functional_value = 0.0;
  // Functional value at every iterate, starting from the initial point.
  std::vector<double> functional_trace;
  bool converged = false;
  // No sample is positive definite, so the stationary point returned is not
  // certified to be the unique minimiser.
  bool uniqueness_warning = false;
};

/// sum_i w_i Pi(Sigma_i, F)^2 with uniform weights 1/n when `weights` is empty.
double frechet_functional(const PsdMatrix& f, std::span<const PsdMatrix> samples,
                          std::span<const double> weights = {});

/// Empirical barycentre by the push-forward iteration
///   Xi_{k+1} = Tbar_k Xi_k Tbar_k,   Tbar_k = (1/n) sum_i T_{Xi_k}^{Sigma_i},
/// run on range(S_n) of the arithmetic mean S_n and embedded back with zeros.
/// Stops when ||Xi_{k+1} - Xi_k||_1 < rtol * max(1, ||Xi_k||_1). Hitting
/// max_iter returns the last iterate with converged = false.
BarycenterResult barycenter_fixed_point(std::span<const PsdMatrix> samples,
                                        const BarycenterConfig& cfg = {});

/// ||Xi - (1/n) sum_i (Xi^{1/2} Sigma_i Xi^{1/2})^{1/2}||_1.
double fixed_point_residual(const PsdMatrix& xi, std::span<const PsdMatrix> samples,
                            double rank_tol = kDefaultRankTol);

/// xi_hat <= arithmetic mean of the samples in the Loewner order.
bool check_domination(const PsdMatrix& xi_hat, std::span<const PsdMatrix> samples, double tol);

/// ((1/n) sum_i Sigma_i^{1/2})^2 for pairwise-commuting samples. Throws
/// InputError if some pair has ||[Sigma_i, Sigma_j]||_HS > 1e-8 * scale.
PsdMatrix commuting_barycenter_oracle(std::span<const PsdMatrix> samples);

/// Central difference (tr phi(Xi + eps H) - tr phi(Xi - eps H)) / (2 eps) of
/// phi(F) = (1/n) sum_i (F^{1/2} Sigma_i F^{1/2})^{1/2} - F. At a barycentre
/// this should be -tr(H)/2.
double trace_derivative_check(const PsdMatrix& xi_hat, std::span<const PsdMatrix> samples,
                              const SymMatrix& h, double eps);

/// Arithmetic mean S_n.
PsdMatrix arithmetic_mean(std::span<const PsdMatrix> samples);

}  // namespace bw
