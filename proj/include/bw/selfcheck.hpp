#pragma once

// Randomised property suites over the geometry and the solver, plus the
// seeded matrix generators they draw from.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/rng.hpp"

namespace bw {

// ---------------------------------------------------------------------------
// Generators

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(Index d, SeededRng& rng);
/// Symmetric with standard normal entries, scaled to unit HS norm.
SymMatrix random_symmetric(Index d, SeededRng& rng);
/// Q diag(lambda) Q^T with lambda uniform in [lo, hi].
PsdMatrix random_pd(Index d, SeededRng& rng, double lo = 0.1, double hi = 2.0);
/// X X^T / rank with X a d x rank Gaussian matrix.
PsdMatrix random_psd(Index d, Index rank, SeededRng& rng);

enum class PairKind { FullFull, FullDeficient, Nested, Arbitrary };

struct PsdPair {
  PsdMatrix f;
  PsdMatrix g;
  PairKind kind;
  // ker(f) is contained in ker(g), so the optimal map f -> g exists.
  bool map_defined() const { return kind != PairKind::Arbitrary; }
};

/// Cycles through the four kinds: both full rank; f full rank and g rank
/// deficient; f and g rank deficient with range(g) inside range(f); both
/// rank deficient with unrelated ranges.
PsdPair random_pair(Index d, SeededRng& rng, int index);

// ---------------------------------------------------------------------------
// Suites

using DistanceFn = std::function<double(const PsdMatrix&, const PsdMatrix&)>;

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // largest violation margin seen (suite-specific units)
  std::string detail;

  bool pass() const { return cases > 0 && failures == 0; }
};

struct SelfcheckOptions {
  std::uint64_t seed = 20240601;
  Index min_dim = 2;
  Index max_dim = 10;
  int pairs = 1000;          // cross-form and inequality suites
  int monotone_pairs = 500;
  int derivative_cases = 200;
  int trace_sets = 50;       // deformation sample sets, d = 4, n = 20
  int solver_sets = 100;     // commuting / descent / domination sets
  // Closed-form distance used by the inequality and cross-form suites.
  DistanceFn distance;
};

/// Both inequality chains with 1e-10 slack.
SuiteResult suite_lemma1(const SelfcheckOptions& opt);
/// Closed form against the Procrustes and map forms, 1e-8 * (1 + distance).
SuiteResult suite_cross_form(const SelfcheckOptions& opt);
/// A <= B implies sqrt(A) <= sqrt(B) and C^T A C <= C^T B C, tol 1e-8.
SuiteResult suite_monotonicity(const SelfcheckOptions& opt);
/// Square-root derivative: Sylvester residual (1e-9 relative), central
/// differences (1e-5 relative), contraction ||D(F, F^{1/2} H)|| <= ||H||.
SuiteResult suite_sqrt_derivative(const SelfcheckOptions& opt);
/// d/de tr phi(Xi + e H) = -tr(H)/2 at a solved barycentre, within 1e-5.
SuiteResult suite_trace_identity(const SelfcheckOptions& opt);
/// Solver on commuting families against the closed-form oracle (1e-7),
/// monotone functional along the iterates, and domination by the mean.
SuiteResult suite_commuting_solver(const SelfcheckOptions& opt);
/// Monotone functional and domination on generic (non-commuting) sets.
SuiteResult suite_descent_domination(const SelfcheckOptions& opt);

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& opt);

/// bw_distance with the sign of the cross term flipped. Only for checking
/// that the suites catch a broken distance.
double bw_distance_sign_mutant(const PsdMatrix& f, const PsdMatrix& g);

}  // namespace bw
