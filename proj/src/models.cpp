#include "bw/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace bw {

double DeformationSpec::total_amplitude() const {
  return std::accumulate(amplitudes.begin(), amplitudes.end(), 0.0);
}

void DeformationSpec::validate() const {
  if (xi.dim() == 0) throw InputError("deformation spec: template Xi is empty");
  if (directions.size() != amplitudes.size()) {
    throw InputError("deformation spec: " + std::to_string(directions.size()) + " directions but " +
                     std::to_string(amplitudes.size()) + " amplitudes");
  }
  for (std::size_t k = 0; k < directions.size(); ++k) {
    if (directions[k].dim() != xi.dim()) throw DimensionMismatchError(xi.dim(), directions[k].dim());
    if (op_norm(directions[k]) > 1.0 + 1e-12) {
      throw InputError("deformation spec: direction " + std::to_string(k) + " has operator norm > 1");
    }
    if (!(amplitudes[k] >= 0.0 && amplitudes[k] < 1.0)) {
      throw InputError("deformation spec: amplitude " + std::to_string(k) + " outside [0, 1)");
    }
  }
  if (!(total_amplitude() < 1.0)) throw InputError("deformation spec: amplitudes must sum to < 1");
}

DeformationSpec DeformationSpec::standard(Index d, double total_amplitude) {
  if (d < 1) throw InputError("dimension must be positive");
  if (!(total_amplitude >= 0.0 && total_amplitude < 1.0)) throw InputError("deformation amplitude must lie in [0, 1)");
  Vector diag(d);
  for (Index j = 0; j < d; ++j) diag(j) = 1.0 / static_cast<double>(j + 1);
  DeformationSpec spec;
  spec.xi = PsdMatrix::diagonal(diag);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      Matrix b = Matrix::Zero(d, d);
      b(i, j) = 1.0;
      b(j, i) = 1.0;
      spec.directions.push_back(SymMatrix(b));
    }
  }
  const double each = total_amplitude / static_cast<double>(spec.directions.size());
  spec.amplitudes.assign(spec.directions.size(), each);
  spec.validate();
  return spec;
}

DeformationDraw sample_template_deformation(const DeformationSpec& spec, SeededRng& rng) {
  const Index d = spec.dim();
  Matrix t = Matrix::Identity(d, d);
  for (std::size_t k = 0; k < spec.directions.size(); ++k) {
    const double c = spec.amplitudes[k];
    if (c == 0.0) continue;
    t += rng.uniform(-c, c) * spec.directions[k].matrix();
  }
  PsdMatrix map(SymMatrix::symmetrize(t));
  const double t_op = map.spectrum().max_eigenvalue();
  PsdMatrix sigma = nearest_psd(t * spec.xi.matrix() * t, t_op * t_op * spec.xi.spectrum().max_eigenvalue());
  return DeformationDraw{std::move(sigma), std::move(map)};
}

PsdMatrix sample_wishart(const PsdMatrix& scale, int dof, SeededRng& rng) {
  const Index d = scale.dim();
  if (dof < d) {
    throw InputError("wishart: dof " + std::to_string(dof) + " is below dimension " + std::to_string(d));
  }
  const Matrix root = matrix_sqrt(scale).matrix();
  Matrix z(d, dof);
  for (Index j = 0; j < dof; ++j) {
    for (Index i = 0; i < d; ++i) z(i, j) = rng.normal();
  }
  const Matrix x = root * z;
  return nearest_psd(x * x.transpose() / static_cast<double>(dof), scale.spectrum().max_eigenvalue());
}

PsdMatrix degenerate_chi2_example(SeededRng& rng) {
  const double z = rng.normal();
  Vector diag(2);
  diag << z * z, 0.0;
  return PsdMatrix::diagonal(diag);
}

PsdMatrix degenerate_chi2_barycenter() {
  Vector diag(2);
  diag << 2.0 / std::numbers::pi, 0.0;
  return PsdMatrix::diagonal(diag);
}

double InstabilityFamily::expected_gap() const { return std::abs(1.0 - 1.0 / b); }

double InstabilityFamily::expected_distance(Index n) const {
  double tail = 0.0;
  for (std::size_t j = static_cast<std::size_t>(n); j < lambda_sq.size(); ++j) tail += lambda_sq[j];
  return (1.0 - b) * std::sqrt(tail);
}

std::vector<double> geometric_profile(Index d) {
  std::vector<double> out(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = std::ldexp(1.0, -static_cast<int>(j + 1));
  return out;
}

InstabilityFamily instability_sequence(Index d, double b, std::vector<double> lambda_sq) {
  if (!(b > 0.0 && b < 1.0)) throw InputError("instability: b must lie in (0, 1)");
  if (d < 2) throw InputError("instability: d must be at least 2");
  if (static_cast<Index>(lambda_sq.size()) != d) throw InputError("instability: profile length must equal d");
  for (double l : lambda_sq) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("instability: profile must be positive");
  }
  InstabilityFamily fam;
  fam.d = d;
  fam.b = b;
  const double a2 = 1.0 - b * b;
  const double b2 = b * b;
  const Vector lam = Eigen::Map<const Vector>(lambda_sq.data(), d);
  fam.xi = PsdMatrix::diagonal(lam);
  for (Index n = 1; n < d; ++n) {
    Vector diag = b2 * lam;
    diag.head(n) += a2 * lam.head(n);
    fam.xi_n.push_back(PsdMatrix::diagonal(diag));
  }
  // The map goes through F^{1/2} G F^{1/2}, whose spectrum spans the square
  // of the members' dynamic range.
  const double ratio = b2 * lam.minCoeff() / lam.maxCoeff();
  fam.rank_tol = std::min(kDefaultRankTol, 1e-3 * ratio * ratio);
  fam.lambda_sq = std::move(lambda_sq);
  return fam;
}

}  // namespace bw
