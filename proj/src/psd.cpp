#include "bw/psd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace bw {

namespace {

void require_finite(const Matrix& m) {
  if (!m.allFinite()) throw InputError("matrix has non-finite entries");
}

void require_square(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InputError("matrix is not square: " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

SpectralDecomposition decompose(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

// Sorts eigenpairs into descending order.
void sort_descending(Vector& values, Matrix& vectors) {
  const Index d = values.size();
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  Vector v(d);
  Matrix e(vectors.rows(), d);
  for (Index k = 0; k < d; ++k) {
    v(k) = values(order[static_cast<std::size_t>(k)]);
    e.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  values = std::move(v);
  vectors = std::move(e);
}

}  // namespace

Matrix SpectralDecomposition::apply(const std::function<double(double)>& f) const {
  Vector mapped = eigenvalues.unaryExpr(f);
  Matrix out = eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix SpectralDecomposition::reconstruct() const {
  return apply([](double x) { return x; });
}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(const Matrix& m) {
  require_square(m);
  if (m.rows() == 0) throw InputError("matrix dimension must be positive");
  require_finite(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw InputError("matrix is not symmetric (max |m - m^T| = " + std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
  require_square(m);
  require_finite(m);
  return SymMatrix(Matrix(0.5 * (m + m.transpose())), Unchecked{});
}

SymMatrix SymMatrix::zero(Index d) { return SymMatrix(Matrix::Zero(d, d), Unchecked{}); }
SymMatrix SymMatrix::identity(Index d) { return SymMatrix(Matrix::Identity(d, d), Unchecked{}); }
SymMatrix SymMatrix::diagonal(const Vector& d) {
  require_finite(d);
  return SymMatrix(Matrix(d.asDiagonal()), Unchecked{});
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatchError(a.dim(), b.dim());
  return SymMatrix(Matrix(a.m_ + b.m_), SymMatrix::Unchecked{});
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatchError(a.dim(), b.dim());
  return SymMatrix(Matrix(a.m_ - b.m_), SymMatrix::Unchecked{});
}

SymMatrix operator*(double s, const SymMatrix& a) {
  return SymMatrix(Matrix(s * a.m_), SymMatrix::Unchecked{});
}

// ---------------------------------------------------------------------------

PsdMatrix::PsdMatrix(const Matrix& m) : PsdMatrix(SymMatrix(m)) {}

PsdMatrix::PsdMatrix(const SymMatrix& s) {
  SpectralDecomposition sd = decompose(s.matrix());
  const double lmax = sd.max_eigenvalue();
  const double lmin = sd.min_eigenvalue();
  if (lmin < 0.0) {
    if (lmin < -kPsdTol * std::max(lmax, 0.0)) {
      throw InputError("matrix is not positive semidefinite (lambda_min = " +
                       std::to_string(lmin) + ", lambda_max = " + std::to_string(lmax) + ")");
    }
    sd.eigenvalues = sd.eigenvalues.cwiseMax(0.0);
    sym_ = SymMatrix::symmetrize(sd.reconstruct());
  } else {
    sym_ = s;
  }
  spectrum_ = std::make_shared<const SpectralDecomposition>(std::move(sd));
}

PsdMatrix PsdMatrix::from_spectrum(Vector eigenvalues, Matrix eigenvectors) {
  if (eigenvalues.size() != eigenvectors.cols() || eigenvectors.rows() != eigenvectors.cols()) {
    throw InputError("spectrum shape mismatch");
  }
  if ((eigenvalues.array() < 0.0).any()) throw InputError("negative eigenvalue in spectrum");
  sort_descending(eigenvalues, eigenvectors);
  SpectralDecomposition sd{std::move(eigenvalues), std::move(eigenvectors)};
  PsdMatrix out;
  out.sym_ = SymMatrix::symmetrize(sd.reconstruct());
  out.spectrum_ = std::make_shared<const SpectralDecomposition>(std::move(sd));
  return out;
}

PsdMatrix PsdMatrix::zero(Index d) { return PsdMatrix(SymMatrix::zero(d)); }
PsdMatrix PsdMatrix::identity(Index d) { return PsdMatrix(SymMatrix::identity(d)); }
PsdMatrix PsdMatrix::diagonal(const Vector& d) { return PsdMatrix(SymMatrix::diagonal(d)); }

bool PsdMatrix::is_positive_definite(double rank_tol) const {
  const auto& sd = spectrum();
  const double lmax = sd.max_eigenvalue();
  return lmax > 0.0 && sd.min_eigenvalue() > rank_tol * lmax;
}

PsdMatrix nearest_psd(const Matrix& m, double scale) {
  require_square(m);
  if (!m.allFinite()) throw NumericalError("non-finite entries in matrix product");
  SpectralDecomposition sd = decompose(0.5 * (m + m.transpose()));
  const double floor = -kPsdTol * std::max(sd.max_eigenvalue(), scale);
  if (sd.min_eigenvalue() < floor) {
    throw NumericalError("product expected to be PSD has eigenvalue " +
                         std::to_string(sd.min_eigenvalue()));
  }
  sd.eigenvalues = sd.eigenvalues.cwiseMax(0.0);
  return PsdMatrix::from_spectrum(std::move(sd.eigenvalues), std::move(sd.eigenvectors));
}

// ---------------------------------------------------------------------------

SpectralDecomposition spectral_decompose(const SymMatrix& m) {
  require_finite(m.matrix());
  return decompose(m.matrix());
}

PsdMatrix matrix_sqrt(const PsdMatrix& f, double null_tol) {
  const auto& sd = f.spectrum();
  const double cut = null_tol * sd.max_eigenvalue();
  Vector roots = sd.eigenvalues.unaryExpr([cut](double x) { return x > cut ? std::sqrt(x) : 0.0; });
  return PsdMatrix::from_spectrum(std::move(roots), sd.eigenvectors);
}

PsdMatrix pinv_sqrt(const PsdMatrix& f, double rank_tol) {
  const auto& sd = f.spectrum();
  const double lmax = sd.max_eigenvalue();
  if (lmax <= 0.0) return PsdMatrix::zero(f.dim());
  const double cut = rank_tol * lmax;
  Vector inv = sd.eigenvalues.unaryExpr([cut](double x) { return x > cut ? 1.0 / std::sqrt(x) : 0.0; });
  return PsdMatrix::from_spectrum(std::move(inv), sd.eigenvectors);
}

Matrix kernel_projector(const PsdMatrix& f, double rank_tol) {
  const auto& sd = f.spectrum();
  const double cut = rank_tol * sd.max_eigenvalue();
  return sd.apply([cut](double x) { return x > cut ? 0.0 : 1.0; });
}

Norms norms(const SymMatrix& m) {
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(m.matrix(), Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .cwiseAbs();
  return Norms{ev.maxCoeff(), m.matrix().norm(), ev.sum()};
}

double op_norm(const SymMatrix& m) { return norms(m).op; }
double trace_norm(const SymMatrix& m) { return norms(m).trace; }
double hs_norm(const Matrix& m) { return m.norm(); }

double nuclear_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) throw DimensionMismatchError(a.dim(), b.dim());
  const SymMatrix diff = b - a;
  const Vector ev =
      Eigen::SelfAdjointEigenSolver<Matrix>(diff.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
  const double op = ev.cwiseAbs().maxCoeff();
  return ev(0) >= -tol * std::max(1.0, op);
}

Matrix sqrt_frechet_derivative(const PsdMatrix& f, const Matrix& h, double rank_tol) {
  if (h.rows() != f.dim() || h.cols() != f.dim()) throw DimensionMismatchError(f.dim(), h.rows());
  require_finite(h);
  if (!f.is_positive_definite(rank_tol)) {
    throw SingularityError("square-root derivative needs a positive definite base point");
  }
  const auto& sd = f.spectrum();
  const Vector roots = sd.eigenvalues.cwiseSqrt();
  const Matrix& v = sd.eigenvectors;
  Matrix rotated = v.transpose() * h * v;
  for (Index j = 0; j < rotated.cols(); ++j) {
    for (Index i = 0; i < rotated.rows(); ++i) rotated(i, j) /= roots(i) + roots(j);
  }
  return v * rotated * v.transpose();
}

SymMatrix sqrt_frechet_derivative(const PsdMatrix& f, const SymMatrix& h, double rank_tol) {
  return SymMatrix::symmetrize(sqrt_frechet_derivative(f, h.matrix(), rank_tol));
}

}  // namespace bw
