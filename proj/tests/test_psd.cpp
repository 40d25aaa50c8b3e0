#include <doctest.h>

#include <cmath>

#include "bw/psd.hpp"
#include "bw/selfcheck.hpp"
#include "oracles.hpp"

using namespace bw;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("SymMatrix validates symmetry and finiteness") {
  CHECK_NOTHROW(SymMatrix(mat2(1, 2, 2, 3)));
  CHECK_THROWS_AS(SymMatrix(mat2(1, 2, 2.1, 3)), InputError);
  CHECK_THROWS_AS(SymMatrix(mat2(1, NAN, NAN, 3)), InputError);
  CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), InputError);
  // Within tolerance the stored matrix is exactly symmetric.
  const SymMatrix s(mat2(1, 2, 2 + 1e-14, 3));
  CHECK(s(0, 1) == s(1, 0));
}

TEST_CASE("PsdMatrix clamps roundoff negatives and rejects real ones") {
  const PsdMatrix tiny = PsdMatrix(SymMatrix::diagonal(vec({1.0, -1e-13})));
  CHECK(tiny.spectrum().min_eigenvalue() == 0.0);
  CHECK(tiny.trace() >= 0.0);
  CHECK_THROWS_AS(PsdMatrix(SymMatrix::diagonal(vec({1.0, -1e-6}))), InputError);
  CHECK_THROWS_AS(nearest_psd(mat2(1, 0, 0, -0.5), 1.0), NumericalError);
}

TEST_CASE("spectral_decompose examples") {
  const auto id = spectral_decompose(SymMatrix::identity(3));
  for (Index i = 0; i < 3; ++i) CHECK(id.eigenvalues(i) == doctest::Approx(1.0));

  const auto d41 = spectral_decompose(SymMatrix::diagonal(vec({1.0, 4.0})));
  CHECK(d41.eigenvalues(0) == doctest::Approx(4.0));
  CHECK(d41.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(std::abs(d41.eigenvectors(1, 0)) == doctest::Approx(1.0));

  const auto s = spectral_decompose(SymMatrix(mat2(2, 1, 1, 2)));
  CHECK(s.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = INFINITY;
  CHECK_THROWS_AS(spectral_decompose(SymMatrix::symmetrize(bad)), InputError);
}

TEST_CASE("spectral decomposition reconstructs and is orthonormal") {
  SeededRng rng(11);
  for (int k = 0; k < 200; ++k) {
    const Index d = 1 + k % 12;
    const SymMatrix m = random_symmetric(d, rng);
    const auto sd = spectral_decompose(m);
    const double scale = std::max(1.0, m.matrix().norm());
    CHECK((sd.reconstruct() - m.matrix()).norm() <= 1e-10 * scale);
    CHECK((sd.eigenvectors.transpose() * sd.eigenvectors - Matrix::Identity(d, d)).norm() <= 1e-10);
    for (Index i = 1; i < d; ++i) CHECK(sd.eigenvalues(i - 1) >= sd.eigenvalues(i));
  }
}

TEST_CASE("matrix_sqrt examples") {
  const PsdMatrix r = matrix_sqrt(PsdMatrix::diagonal(vec({4.0, 9.0})));
  CHECK((r.matrix() - mat2(2, 0, 0, 3)).norm() <= 1e-15);
  CHECK(matrix_sqrt(PsdMatrix::zero(3)).matrix().norm() == 0.0);

  // Oracle: V diag(sqrt 3, 1) V^T with V the normalised (1, 1), (1, -1).
  Matrix v = mat2(1, 1, 1, -1) / std::sqrt(2.0);
  const Matrix expected = v * Vector(vec({std::sqrt(3.0), 1.0})).asDiagonal() * v.transpose();
  const PsdMatrix s = matrix_sqrt(PsdMatrix(mat2(2, 1, 1, 2)));
  CHECK((s.matrix() - expected).norm() <= 1e-14);
}

TEST_CASE("matrix_sqrt squares back and matches Denman-Beavers") {
  SeededRng rng(12);
  for (int k = 0; k < 100; ++k) {
    const Index d = 1 + k % 15;
    const PsdMatrix f = k % 3 ? random_pd(d, rng) : random_psd(d, 1 + k % d, rng);
    const Matrix r = matrix_sqrt(f).matrix();
    CHECK((r * r - f.matrix()).norm() <= 1e-9 * std::max(1e-300, f.matrix().norm()));
    CHECK(PsdMatrix(r).spectrum().min_eigenvalue() >= 0.0);
    if (f.is_positive_definite()) CHECK((r - oracle::db_sqrt(f.matrix())).norm() <= 1e-10);
  }
}

TEST_CASE("pinv_sqrt examples") {
  CHECK((pinv_sqrt(PsdMatrix::diagonal(vec({4.0, 0.0}))).matrix() - mat2(0.5, 0, 0, 0)).norm() == 0.0);
  CHECK((pinv_sqrt(PsdMatrix::identity(4)).matrix() - Matrix::Identity(4, 4)).norm() <= 1e-15);
  const PsdMatrix p = pinv_sqrt(PsdMatrix::diagonal(vec({9.0, 1e-20})), 1e-12);
  CHECK(p.matrix()(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(p.matrix()(1, 1) == 0.0);
  CHECK(pinv_sqrt(PsdMatrix::zero(2)).matrix().norm() == 0.0);
}

TEST_CASE("norms examples and chain") {
  const Norms a = norms(SymMatrix::diagonal(vec({3.0, -4.0})));
  CHECK(a.op == doctest::Approx(4.0));
  CHECK(a.hs == doctest::Approx(5.0));
  CHECK(a.trace == doctest::Approx(7.0));
  const Norms b = norms(SymMatrix::identity(4));
  CHECK(b.op == doctest::Approx(1.0));
  CHECK(b.hs == doctest::Approx(2.0));
  CHECK(b.trace == doctest::Approx(4.0));
  const Norms z = norms(SymMatrix::zero(3));
  CHECK(z.op == 0.0);
  CHECK(z.hs == 0.0);
  CHECK(z.trace == 0.0);

  SeededRng rng(13);
  for (int k = 0; k < 1000; ++k) {
    const SymMatrix m = (1.0 + k % 7) * random_symmetric(1 + k % 10, rng);
    const Norms n = norms(m);
    CHECK(n.op <= n.hs + 1e-12);
    CHECK(n.hs <= n.trace + 1e-12);
    CHECK(n.trace == doctest::Approx(oracle::nuclear(m.matrix())).epsilon(1e-12));
  }
}

TEST_CASE("loewner_leq examples") {
  CHECK(loewner_leq(SymMatrix::diagonal(vec({1, 1})), SymMatrix::diagonal(vec({2, 3})), 1e-10));
  CHECK_FALSE(loewner_leq(SymMatrix::diagonal(vec({2, 0})), SymMatrix::diagonal(vec({1, 5})), 1e-10));
  const SymMatrix a(mat2(2, 1, 1, 2));
  CHECK(loewner_leq(a, a, 1e-10));
  CHECK_THROWS_AS(loewner_leq(SymMatrix::identity(2), SymMatrix::identity(3), 1e-10), InputError);
}

TEST_CASE("monotonicity of square root and congruence") {
  SeededRng rng(14);
  for (int k = 0; k < 200; ++k) {
    const Index d = 2 + k % 9;
    const PsdMatrix a = random_psd(d, 1 + k % d, rng);
    const PsdMatrix b = nearest_psd(a.matrix() + random_psd(d, 1 + (k / 2) % d, rng).matrix(), 1.0);
    CHECK(loewner_leq(matrix_sqrt(a).sym(), matrix_sqrt(b).sym(), 1e-8));
    Matrix c(d, d);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) c(i, j) = rng.normal();
    }
    CHECK(loewner_leq(SymMatrix::symmetrize(c.transpose() * a.matrix() * c),
                      SymMatrix::symmetrize(c.transpose() * b.matrix() * c), 1e-8));
  }
}

TEST_CASE("sqrt_frechet_derivative examples") {
  SeededRng rng(15);
  const SymMatrix h = random_symmetric(3, rng);
  const SymMatrix d = sqrt_frechet_derivative(PsdMatrix(2.25 * SymMatrix::identity(3)), h);
  CHECK((d.matrix() - h.matrix() / 3.0).norm() <= 1e-15);

  const SymMatrix off(mat2(0, 1, 1, 0));
  const SymMatrix d2 = sqrt_frechet_derivative(PsdMatrix::diagonal(vec({4.0, 1.0})), off);
  CHECK((d2.matrix() - mat2(0, 1.0 / 3.0, 1.0 / 3.0, 0)).norm() <= 1e-15);

  CHECK_THROWS_AS(sqrt_frechet_derivative(PsdMatrix::diagonal(vec({1.0, 0.0})), off), SingularityError);
}

TEST_CASE("sqrt_frechet_derivative: Sylvester residual, finite differences, contraction") {
  SeededRng rng(16);
  for (int k = 0; k < 100; ++k) {
    const Index d = 1 + k % 20;
    const PsdMatrix f = random_pd(d, rng, 0.2, 2.0);
    const SymMatrix h = random_symmetric(d, rng);
    const Matrix fh = matrix_sqrt(f).matrix();
    const Matrix dm = sqrt_frechet_derivative(f, h).matrix();
    CHECK((fh * dm + dm * fh - h.matrix()).norm() <= 1e-9 * h.matrix().norm());

    const double eps = 1e-6;
    const Matrix fd = (oracle::db_sqrt(f.matrix() + eps * h.matrix()) - oracle::db_sqrt(f.matrix() - eps * h.matrix())) /
                      (2.0 * eps);
    CHECK((fd - dm).norm() <= 1e-5 * dm.norm());

    const Matrix contracted = sqrt_frechet_derivative(f, Matrix(fh * h.matrix()));
    CHECK(contracted.norm() <= h.matrix().norm() + 1e-10);
  }
}
