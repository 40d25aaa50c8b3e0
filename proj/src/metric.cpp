#include "bw/metric.hpp"

#include <algorithm>
#include <cmath>

namespace bw {

namespace {

void require_same_dim(const PsdMatrix& f, const PsdMatrix& g) {
  if (f.dim() != g.dim()) throw DimensionMismatchError(f.dim(), g.dim());
}

double sqrt_trace(const PsdMatrix& m, double null_tol) {
  const auto& sd = m.spectrum();
  const double cut = null_tol * sd.max_eigenvalue();
  double sum = 0.0;
  for (Index i = 0; i < sd.dim(); ++i) {
    if (sd.eigenvalues(i) > cut) sum += std::sqrt(sd.eigenvalues(i));
  }
  return sum;
}

}  // namespace

double bw_distance(const PsdMatrix& f, const PsdMatrix& g, double rank_tol) {
  require_same_dim(f, g);
  const PsdMatrix g_half = matrix_sqrt(g, rank_tol);
  const Matrix& gh = g_half.matrix();
  const PsdMatrix inner = nearest_psd(gh * f.matrix() * gh, g.spectrum().max_eigenvalue() *
                                                                f.spectrum().max_eigenvalue());
  const double sq = f.trace() + g.trace() - 2.0 * sqrt_trace(inner, rank_tol);
  return std::sqrt(std::max(0.0, sq));
}

double bw_distance_procrustes(const PsdMatrix& f, const PsdMatrix& g, double rank_tol) {
  require_same_dim(f, g);
  const Matrix fh = matrix_sqrt(f, rank_tol).matrix();
  const Matrix gh = matrix_sqrt(g, rank_tol).matrix();
  Eigen::JacobiSVD<Matrix> svd(fh * gh, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix align = svd.matrixV() * svd.matrixU().transpose();
  return (fh - gh * align).norm();
}

TransportMap optimal_map(const PsdMatrix& f, const PsdMatrix& g, double rank_tol) {
  require_same_dim(f, g);
  const Matrix ker = kernel_projector(f, rank_tol);
  const double g_op = g.spectrum().max_eigenvalue();
  const double leak = op_norm(SymMatrix::symmetrize(ker * g.matrix() * ker));
  if (leak > rank_tol * g_op) {
    throw KernelMismatchError("ker(F) is not contained in ker(G): ||P G P||_op = " +
                              std::to_string(leak) + ", ||G||_op = " + std::to_string(g_op));
  }
  const PsdMatrix f_half = matrix_sqrt(f, rank_tol);
  const PsdMatrix f_ihalf = pinv_sqrt(f, rank_tol);
  const Matrix& fh = f_half.matrix();
  const Matrix& fi = f_ihalf.matrix();
  const double f_op = f.spectrum().max_eigenvalue();
  const PsdMatrix inner = nearest_psd(fh * g.matrix() * fh, f_op * g_op);
  const PsdMatrix inner_half = matrix_sqrt(inner, rank_tol);
  const double fi_op = f_ihalf.spectrum().max_eigenvalue();
  PsdMatrix t = nearest_psd(fi * inner_half.matrix() * fi,
                            fi_op * fi_op * inner_half.spectrum().max_eigenvalue());
  return TransportMap{f, g, std::move(t)};
}

double bw_distance_via_map(const PsdMatrix& f, const PsdMatrix& g, double rank_tol) {
  const TransportMap map = optimal_map(f, g, rank_tol);
  const Matrix fh = matrix_sqrt(f, rank_tol).matrix();
  const Matrix shift = map.matrix.matrix() - Matrix::Identity(f.dim(), f.dim());
  return (shift * fh).norm();
}

TangentVector log_map(const PsdMatrix& base, const PsdMatrix& target, double rank_tol) {
  const TransportMap map = optimal_map(base, target, rank_tol);
  return TangentVector{base, map.matrix.sym() - SymMatrix::identity(base.dim())};
}

PsdMatrix exp_map(const PsdMatrix& base, const SymMatrix& v) {
  if (base.dim() != v.dim()) throw DimensionMismatchError(base.dim(), v.dim());
  const SymMatrix lift = SymMatrix::identity(base.dim()) + v;
  PsdMatrix push;
  try {
    push = PsdMatrix(lift);
  } catch (const InputError&) {
    throw InputError("exp_map: I + V is not positive semidefinite");
  }
  const double op = push.spectrum().max_eigenvalue();
  return nearest_psd(push.matrix() * base.matrix() * push.matrix(),
                     op * op * base.spectrum().max_eigenvalue());
}

PsdMatrix exp_map(const TangentVector& v) { return exp_map(v.base, v.value); }

double tangent_norm(const PsdMatrix& base, const SymMatrix& v) {
  if (base.dim() != v.dim()) throw DimensionMismatchError(base.dim(), v.dim());
  return (matrix_sqrt(base).matrix() * v.matrix()).norm();
}

bool Lemma1Bounds::holds(double slack) const {
  return sqrt_gap <= trace_gap + slack && trace_gap <= trace_bound + slack &&
         distance * distance <= sqrt_gap + slack;
}

Lemma1Bounds lemma1_bounds(const PsdMatrix& f, const PsdMatrix& g) {
  return lemma1_bounds(f, g, bw_distance(f, g));
}

Lemma1Bounds lemma1_bounds(const PsdMatrix& f, const PsdMatrix& g, double distance) {
  require_same_dim(f, g);
  const Matrix diff_half = matrix_sqrt(f).matrix() - matrix_sqrt(g).matrix();
  Lemma1Bounds out;
  out.sqrt_gap = diff_half.squaredNorm();
  out.trace_gap = trace_norm(f.sym() - g.sym());
  out.distance = distance;
  out.trace_bound = (std::sqrt(std::max(0.0, f.trace())) + std::sqrt(std::max(0.0, g.trace()))) * distance;
  return out;
}

}  // namespace bw
