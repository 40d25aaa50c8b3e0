#include "bw/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bw {

namespace {

Index common_dim(std::span<const PsdMatrix> samples) {
  if (samples.empty()) throw InputError("sample list is empty");
  const Index d = samples.front().dim();
  for (const auto& s : samples) {
    if (s.dim() != d) throw DimensionMismatchError(d, s.dim());
  }
  return d;
}

double max_op(std::span<const PsdMatrix> samples) {
  double out = 0.0;
  for (const auto& s : samples) out = std::max(out, s.spectrum().max_eigenvalue());
  return out;
}

// One sweep of the averaged map at xi (r x r, positive definite on the
// working subspace). Accumulates the mean map and the functional value.
struct Sweep {
  Matrix mean_map;
  double functional = 0.0;
};

Sweep sweep(const PsdMatrix& xi, std::span<const PsdMatrix> samples, double rank_tol) {
  const Index r = xi.dim();
  const double n = static_cast<double>(samples.size());
  const PsdMatrix xi_half = matrix_sqrt(xi, rank_tol);
  const PsdMatrix xi_ihalf = pinv_sqrt(xi, rank_tol);
  const Matrix& xh = xi_half.matrix();
  const Matrix& xih = xi_ihalf.matrix();
  const double xi_op = xi.spectrum().max_eigenvalue();

  Sweep out{Matrix::Zero(r, r), 0.0};
  for (const auto& s : samples) {
    const PsdMatrix inner = nearest_psd(xh * s.matrix() * xh, xi_op * s.spectrum().max_eigenvalue());
    const PsdMatrix inner_half = matrix_sqrt(inner, rank_tol);
    out.mean_map += xih * inner_half.matrix() * xih;
    out.functional += std::max(0.0, xi.trace() + s.trace() - 2.0 * inner_half.trace());
  }
  out.mean_map /= n;
  out.functional /= n;
  return out;
}

}  // namespace

void BarycenterConfig::validate() const {
  if (!(rtol > 0.0)) throw InputError("rtol must be positive");
  if (max_iter < 1) throw InputError("max_iter must be at least 1");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw InputError("rank_tol must lie in (0, 1)");
}

PsdMatrix arithmetic_mean(std::span<const PsdMatrix> samples) {
  const Index d = common_dim(samples);
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& s : samples) sum += s.matrix();
  return nearest_psd(sum / static_cast<double>(samples.size()), max_op(samples));
}

double frechet_functional(const PsdMatrix& f, std::span<const PsdMatrix> samples,
                          std::span<const double> weights) {
  const Index d = common_dim(samples);
  if (f.dim() != d) throw DimensionMismatchError(d, f.dim());
  if (!weights.empty()) {
    if (weights.size() != samples.size()) throw InputError("weights and samples differ in length");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InputError("weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("weights must sum to 1");
  }
  const double uniform = 1.0 / static_cast<double>(samples.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dist = bw_distance(samples[i], f);
    sum += (weights.empty() ? uniform : weights[i]) * dist * dist;
  }
  return sum;
}

BarycenterResult barycenter_fixed_point(std::span<const PsdMatrix> samples,
                                        const BarycenterConfig& cfg) {
  cfg.validate();
  const Index d = common_dim(samples);
  const PsdMatrix mean = arithmetic_mean(samples);

  BarycenterResult result;
  result.uniqueness_warning = std::none_of(samples.begin(), samples.end(), [&](const PsdMatrix& s) {
    return s.is_positive_definite(cfg.rank_tol);
  });

  const auto& msd = mean.spectrum();
  if (msd.max_eigenvalue() <= 0.0) {
    result.barycenter = PsdMatrix::zero(d);
    result.converged = true;
    result.functional_trace = {0.0};
    return result;
  }

  // Working subspace: range of the arithmetic mean.
  const double cut = cfg.rank_tol * msd.max_eigenvalue();
  Index r = 0;
  while (r < d && msd.eigenvalues(r) > cut) ++r;
  const bool full = r == d;
  const Matrix basis = msd.eigenvectors.leftCols(r);
  const double scale = max_op(samples);

  auto project = [&](const PsdMatrix& m) {
    return full ? m : nearest_psd(basis.transpose() * m.matrix() * basis, scale);
  };
  std::vector<PsdMatrix> work;
  work.reserve(samples.size());
  for (const auto& s : samples) work.push_back(project(s));

  if (cfg.init && cfg.init->dim() != d) throw DimensionMismatchError(d, cfg.init->dim());
  PsdMatrix xi = cfg.init ? project(*cfg.init) : project(mean);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Sweep sw = sweep(xi, work, cfg.rank_tol);
    result.functional_trace.push_back(sw.functional);
    const Matrix& t = sw.mean_map;
    const Matrix next_raw = t * xi.matrix() * t;
    if (!next_raw.allFinite()) {
      throw NumericalError("barycentre iteration produced non-finite entries at step " +
                           std::to_string(it));
    }
    const double t_op = t.cwiseAbs().rowwise().sum().maxCoeff();
    PsdMatrix next = nearest_psd(next_raw, t_op * t_op * xi.spectrum().max_eigenvalue());
    const double step = trace_norm(next.sym() - xi.sym());
    const double ref = std::max(1.0, xi.trace());
    xi = std::move(next);
    result.iterations = it;
    if (step < cfg.rtol * ref) {
      result.converged = true;
      break;
    }
  }
  result.functional_trace.push_back(sweep(xi, work, cfg.rank_tol).functional);
  result.functional_value = result.functional_trace.back();

  result.barycenter =
      full ? xi : nearest_psd(basis * xi.matrix() * basis.transpose(), xi.spectrum().max_eigenvalue());
  result.residual = fixed_point_residual(result.barycenter, samples, cfg.rank_tol);
  return result;
}

double fixed_point_residual(const PsdMatrix& xi, std::span<const PsdMatrix> samples,
                            double rank_tol) {
  const Index d = common_dim(samples);
  if (xi.dim() != d) throw DimensionMismatchError(d, xi.dim());
  const Matrix xh = matrix_sqrt(xi, rank_tol).matrix();
  const double xi_op = xi.spectrum().max_eigenvalue();
  Matrix avg = Matrix::Zero(d, d);
  for (const auto& s : samples) {
    const PsdMatrix inner = nearest_psd(xh * s.matrix() * xh, xi_op * s.spectrum().max_eigenvalue());
    avg += matrix_sqrt(inner, rank_tol).matrix();
  }
  avg /= static_cast<double>(samples.size());
  return trace_norm(SymMatrix::symmetrize(xi.matrix() - avg));
}

bool check_domination(const PsdMatrix& xi_hat, std::span<const PsdMatrix> samples, double tol) {
  return loewner_leq(xi_hat.sym(), arithmetic_mean(samples).sym(), tol);
}

PsdMatrix commuting_barycenter_oracle(std::span<const PsdMatrix> samples) {
  const Index d = common_dim(samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const Matrix& a = samples[i].matrix();
      const Matrix& b = samples[j].matrix();
      const double scale = std::max(1.0, a.norm() * b.norm());
      if ((a * b - b * a).norm() > 1e-8 * scale) {
        throw InputError("samples " + std::to_string(i) + " and " + std::to_string(j) +
                         " do not commute");
      }
    }
  }
  Matrix mean_root = Matrix::Zero(d, d);
  for (const auto& s : samples) mean_root += matrix_sqrt(s).matrix();
  mean_root /= static_cast<double>(samples.size());
  return nearest_psd(mean_root * mean_root, max_op(samples));
}

double trace_derivative_check(const PsdMatrix& xi_hat, std::span<const PsdMatrix> samples,
                              const SymMatrix& h, double eps) {
  const Index d = common_dim(samples);
  if (xi_hat.dim() != d) throw DimensionMismatchError(d, xi_hat.dim());
  if (h.dim() != d) throw DimensionMismatchError(d, h.dim());
  if (!(eps > 0.0)) throw InputError("eps must be positive");

  auto trace_phi = [&](const SymMatrix& point) {
    PsdMatrix f;
    try {
      f = PsdMatrix(point);
    } catch (const InputError&) {
      throw InputError("trace_derivative_check: perturbed point Xi +/- eps H is not PSD");
    }
    const Matrix fh = matrix_sqrt(f).matrix();
    double sum = 0.0;
    for (const auto& s : samples) {
      const PsdMatrix inner =
          nearest_psd(fh * s.matrix() * fh, f.spectrum().max_eigenvalue() * s.spectrum().max_eigenvalue());
      sum += matrix_sqrt(inner).trace();
    }
    return sum / static_cast<double>(samples.size()) - f.trace();
  };
  const SymMatrix step = eps * h;
  return (trace_phi(xi_hat.sym() + step) - trace_phi(xi_hat.sym() - step)) / (2.0 * eps);
}

}  // namespace bw
