#pragma once

// Dense symmetric / positive-semidefinite matrices and the spectral matrix
// functions built on them. Every matrix function goes through one symmetric
// eigendecomposition; there is no iterative square root anywhere.

#include <Eigen/Dense>

#include <functional>
#include <memory>

#include "bw/errors.hpp"

namespace bw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Eigenvalues in [-kPsdTol * lambda_max, 0) are clamped to zero on PsdMatrix
// construction; anything more negative is rejected.
inline constexpr double kPsdTol = 1e-10;
// Relative threshold below which an eigenvalue counts as null.
inline constexpr double kDefaultRankTol = 1e-12;
// |m(i,j) - m(j,i)| <= kSymmetryTol * max(1, max|m|).
inline constexpr double kSymmetryTol = 1e-12;

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }
  double max_eigenvalue() const { return dim() > 0 ? eigenvalues(0) : 0.0; }
  double min_eigenvalue() const { return dim() > 0 ? eigenvalues(dim() - 1) : 0.0; }

  /// V diag(f(lambda)) V^T, symmetrized.
  Matrix apply(const std::function<double(double)>& f) const;
  Matrix reconstruct() const;
};

class SymMatrix {
 public:
  SymMatrix() = default;

  /// Validates finiteness and symmetry, then stores the exact symmetric part.
  explicit SymMatrix(const Matrix& m);

  /// (m + m^T)/2 without the symmetry check. For results of products that are
  /// symmetric in exact arithmetic.
  static SymMatrix symmetrize(const Matrix& m);
  static SymMatrix zero(Index d);
  static SymMatrix identity(Index d);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  struct Unchecked {};
  SymMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

/// Symmetric positive-semidefinite matrix. Carries its own spectral
/// decomposition, computed once at construction and shared between copies.
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(const Matrix& m);
  explicit PsdMatrix(const SymMatrix& s);

  /// Builds V diag(lambda) V^T from a spectrum with non-negative eigenvalues
  /// (any order); the decomposition is kept, not recomputed.
  static PsdMatrix from_spectrum(Vector eigenvalues, Matrix eigenvectors);
  static PsdMatrix zero(Index d);
  static PsdMatrix identity(Index d);
  static PsdMatrix diagonal(const Vector& d);

  Index dim() const { return sym_.dim(); }
  const SymMatrix& sym() const { return sym_; }
  const Matrix& matrix() const { return sym_.matrix(); }
  double trace() const { return sym_.trace(); }
  const SpectralDecomposition& spectrum() const { return *spectrum_; }

  /// True iff every eigenvalue exceeds rank_tol * lambda_max (and the matrix is nonzero).
  bool is_positive_definite(double rank_tol = kDefaultRankTol) const;

 private:
  SymMatrix sym_;
  std::shared_ptr<const SpectralDecomposition> spectrum_;
};

/// PSD matrix from a product that is PSD in exact arithmetic (e.g. A B A with
/// A symmetric, B PSD). Symmetrizes, then clamps negative eigenvalues down to
/// -kPsdTol * max(lambda_max, scale); scale should bound the size of the
/// factors so that an all-but-zero product is still accepted. More negative
/// eigenvalues throw NumericalError.
PsdMatrix nearest_psd(const Matrix& m, double scale);

/// Throws InputError on non-finite entries.
SpectralDecomposition spectral_decompose(const SymMatrix& m);

/// Non-negative square root. Eigenvalues at or below null_tol * lambda_max
/// are treated as exact zeros, so round-off in a null space does not turn
/// into O(sqrt(eps)) garbage.
PsdMatrix matrix_sqrt(const PsdMatrix& f, double null_tol = kDefaultRankTol);

/// Moore-Penrose inverse square root: lambda^{-1/2} above rank_tol * lambda_max, else 0.
/// pinv_sqrt(0) = 0.
PsdMatrix pinv_sqrt(const PsdMatrix& f, double rank_tol = kDefaultRankTol);

/// Orthogonal projector onto the eigen-directions of f at or below rank_tol * lambda_max.
Matrix kernel_projector(const PsdMatrix& f, double rank_tol = kDefaultRankTol);

struct Norms {
  double op = 0.0;     // largest singular value
  double hs = 0.0;     // Frobenius
  double trace = 0.0;  // nuclear
};

Norms norms(const SymMatrix& m);
double op_norm(const SymMatrix& m);
double trace_norm(const SymMatrix& m);
double hs_norm(const Matrix& m);
/// Sum of singular values of a general square matrix.
double nuclear_norm(const Matrix& m);

/// a <= b in the Loewner order: lambda_min(b - a) >= -tol * max(1, ||b - a||_op).
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

/// Frechet derivative of the square root at f in direction h: the solution D of
/// f^{1/2} D + D f^{1/2} = h, given in f's eigenbasis by
/// h_ij / (sqrt(lambda_i) + sqrt(lambda_j)).
/// Throws SingularityError unless f is positive definite up to rank_tol.
SymMatrix sqrt_frechet_derivative(const PsdMatrix& f, const SymMatrix& h,
                                  double rank_tol = kDefaultRankTol);
/// Same Sylvester solve for a general (not necessarily symmetric) right-hand side.
Matrix sqrt_frechet_derivative(const PsdMatrix& f, const Matrix& h,
                               double rank_tol = kDefaultRankTol);

}  // namespace bw
