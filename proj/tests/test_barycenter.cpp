#include <doctest.h>

#include <cmath>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/models.hpp"
#include "bw/selfcheck.hpp"

using namespace bw;

namespace {

PsdMatrix diag(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return PsdMatrix::diagonal(out);
}

std::vector<PsdMatrix> random_set(SeededRng& rng, Index d, int n) {
  std::vector<PsdMatrix> out;
  for (int k = 0; k < n; ++k) out.push_back(k % 3 ? random_pd(d, rng) : random_psd(d, 1 + k % d, rng));
  return out;
}

}  // namespace

TEST_CASE("frechet_functional examples") {
  SeededRng rng(41);
  const PsdMatrix f = random_pd(3, rng);
  const std::vector<PsdMatrix> same{f, f, f};
  CHECK(frechet_functional(f, same) <= 1e-12);

  const std::vector<PsdMatrix> pair{diag({1}), diag({9})};
  CHECK(frechet_functional(diag({4}), pair) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(frechet_functional(PsdMatrix::zero(1), pair) == doctest::Approx(5.0).epsilon(1e-14));

  const std::vector<double> w{0.25, 0.75};
  CHECK(frechet_functional(diag({4}), pair, w) == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<double> bad{0.5, 0.6};
  CHECK_THROWS_AS(frechet_functional(diag({4}), pair, bad), InputError);
  CHECK_THROWS_AS(frechet_functional(diag({4}), std::vector<PsdMatrix>{}), InputError);
}

TEST_CASE("barycenter_fixed_point examples") {
  SeededRng rng(42);
  const PsdMatrix f = random_pd(4, rng);
  const std::vector<PsdMatrix> same{f, f, f};
  const BarycenterResult r = barycenter_fixed_point(same);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.residual <= 1e-10);
  CHECK((r.barycenter.matrix() - f.matrix()).norm() <= 1e-12);

  const BarycenterResult s = barycenter_fixed_point(std::vector<PsdMatrix>{diag({1}), diag({9})});
  CHECK(s.barycenter.matrix()(0, 0) == doctest::Approx(4.0).epsilon(1e-12));

  const BarycenterResult c = barycenter_fixed_point(std::vector<PsdMatrix>{diag({1, 4}), diag({9, 16})});
  CHECK((c.barycenter.matrix() - diag({4, 9}).matrix()).norm() <= 1e-10);
}

TEST_CASE("barycenter config and edge cases") {
  BarycenterConfig bad;
  bad.rtol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);

  BarycenterConfig wrong_init;
  wrong_init.init = PsdMatrix::identity(3);
  CHECK_THROWS_AS(barycenter_fixed_point(std::vector<PsdMatrix>{diag({1, 2})}, wrong_init), InputError);

  const BarycenterResult z = barycenter_fixed_point(std::vector<PsdMatrix>{PsdMatrix::zero(2), PsdMatrix::zero(2)});
  CHECK(z.converged);
  CHECK(z.barycenter.matrix().norm() == 0.0);

  SeededRng rng(43);
  BarycenterConfig one_step;
  one_step.max_iter = 1;
  one_step.rtol = 1e-15;
  const BarycenterResult partial = barycenter_fixed_point(random_set(rng, 4, 6), one_step);
  CHECK_FALSE(partial.converged);
  CHECK(partial.iterations == 1);
  CHECK(partial.barycenter.dim() == 4);
}

TEST_CASE("uniqueness warning when no sample is positive definite") {
  const BarycenterResult r = barycenter_fixed_point(std::vector<PsdMatrix>{diag({1, 0}), diag({0, 1})});
  CHECK(r.uniqueness_warning);
  const BarycenterResult s = barycenter_fixed_point(std::vector<PsdMatrix>{diag({1, 0}), diag({1, 1})});
  CHECK_FALSE(s.uniqueness_warning);
}

TEST_CASE("fixed_point_residual examples") {
  SeededRng rng(44);
  const PsdMatrix f = random_pd(3, rng);
  CHECK(fixed_point_residual(f, std::vector<PsdMatrix>{f, f}) <= 1e-10);
  const std::vector<PsdMatrix> pair{diag({1}), diag({9})};
  CHECK(fixed_point_residual(diag({4}), pair) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fixed_point_residual(diag({1}), pair) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("check_domination examples") {
  SeededRng rng(45);
  const PsdMatrix f = random_pd(3, rng);
  CHECK(check_domination(f, std::vector<PsdMatrix>{f, f}, 1e-9));
  const std::vector<PsdMatrix> pair{diag({1}), diag({9})};
  CHECK(check_domination(diag({4}), pair, 1e-9));
  const PsdMatrix above = nearest_psd(arithmetic_mean(pair).matrix() + Matrix::Identity(1, 1), 1.0);
  CHECK_FALSE(check_domination(above, pair, 1e-9));
}

TEST_CASE("commuting_barycenter_oracle examples") {
  SeededRng rng(46);
  const PsdMatrix f = random_pd(3, rng);
  CHECK((commuting_barycenter_oracle(std::vector<PsdMatrix>{f, f}).matrix() - f.matrix()).norm() <= 1e-12);
  CHECK(commuting_barycenter_oracle(std::vector<PsdMatrix>{diag({1}), diag({9})}).matrix()(0, 0) ==
        doctest::Approx(4.0));
  const PsdMatrix r = commuting_barycenter_oracle(std::vector<PsdMatrix>{diag({1, 0}), diag({9, 0})});
  CHECK((r.matrix() - diag({4, 0}).matrix()).norm() <= 1e-14);
  CHECK_THROWS_AS(commuting_barycenter_oracle(std::vector<PsdMatrix>{random_pd(3, rng), random_pd(3, rng)}),
                  InputError);
}

TEST_CASE("trace_derivative_check examples") {
  SeededRng rng(47);
  const DeformationSpec spec = DeformationSpec::standard(4);
  std::vector<PsdMatrix> samples;
  for (int k = 0; k < 20; ++k) samples.push_back(sample_template_deformation(spec, rng).sigma);
  BarycenterConfig cfg;
  cfg.rtol = 1e-13;
  const BarycenterResult r = barycenter_fixed_point(samples, cfg);
  REQUIRE(r.converged);

  CHECK(trace_derivative_check(r.barycenter, samples, SymMatrix::zero(4), 1e-5) == 0.0);
  Matrix traceless = Matrix::Zero(4, 4);
  traceless(0, 0) = 1.0;
  traceless(1, 1) = -1.0;
  traceless(0, 2) = traceless(2, 0) = 0.5;
  CHECK(std::abs(trace_derivative_check(r.barycenter, samples, SymMatrix(traceless), 1e-5)) <= 1e-6);
  CHECK(trace_derivative_check(r.barycenter, samples, SymMatrix::identity(4), 1e-5) ==
        doctest::Approx(-2.0).epsilon(5e-6));
  CHECK_THROWS_AS(trace_derivative_check(r.barycenter, samples, SymMatrix::identity(4), 10.0), InputError);
}

TEST_CASE("solver invariants on random sets") {
  SeededRng rng(48);
  for (int k = 0; k < 60; ++k) {
    const Index d = 1 + k % 7;
    const auto samples = random_set(rng, d, 2 + k % 9);
    BarycenterConfig cfg;
    const BarycenterResult r = barycenter_fixed_point(samples, cfg);
    REQUIRE(r.converged);
    // Descent.
    for (std::size_t i = 1; i < r.functional_trace.size(); ++i) {
      CHECK(r.functional_trace[i] <= r.functional_trace[i - 1] + 1e-9);
    }
    // Fixed-point consistency.
    CHECK(r.residual <= 10.0 * cfg.rtol * std::max(1.0, r.barycenter.trace()));
    CHECK(r.residual == doctest::Approx(fixed_point_residual(r.barycenter, samples)));
    // Domination.
    CHECK(check_domination(r.barycenter, samples, 1e-7));
    CHECK(r.functional_value == doctest::Approx(frechet_functional(r.barycenter, samples)).epsilon(1e-9));
  }
}

TEST_CASE("barycentre kernel contains the kernel of the mean") {
  SeededRng rng(49);
  for (int k = 0; k < 30; ++k) {
    const Index d = 3 + k % 5;
    const Index r = 1 + k % (d - 1);
    const Matrix q = random_orthogonal(d, rng);
    std::vector<PsdMatrix> samples;
    for (int i = 0; i < 6; ++i) {
      const PsdMatrix core = random_psd(r, 1 + i % r, rng);
      samples.push_back(nearest_psd(q.leftCols(r) * core.matrix() * q.leftCols(r).transpose(), 1.0));
    }
    const BarycenterResult res = barycenter_fixed_point(samples);
    const Matrix null_dirs = q.rightCols(d - r);
    const Matrix restricted = null_dirs.transpose() * res.barycenter.matrix() * null_dirs;
    CHECK(restricted.cwiseAbs().maxCoeff() <= 1e-8 * res.barycenter.spectrum().max_eigenvalue());
  }
}

TEST_CASE("commuting families match the oracle") {
  SeededRng rng(50);
  for (int k = 0; k < 40; ++k) {
    const Index d = 1 + k % 8;
    const Matrix q = random_orthogonal(d, rng);
    std::vector<PsdMatrix> samples;
    for (int i = 0; i < 1 + k % 20; ++i) {
      Vector lambda(d);
      for (Index j = 0; j < d; ++j) lambda(j) = rng.uniform(0.0, 3.0);
      samples.push_back(PsdMatrix::from_spectrum(lambda, q));
    }
    const BarycenterResult r = barycenter_fixed_point(samples);
    CHECK(bw_distance_procrustes(r.barycenter, commuting_barycenter_oracle(samples)) <= 1e-7);
  }
}

TEST_CASE("scalar barycentre minimises the functional on a grid") {
  SeededRng rng(51);
  std::vector<PsdMatrix> samples;
  double mean_root = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double s = rng.uniform(0.1, 5.0);
    mean_root += std::sqrt(s) / 7.0;
    samples.push_back(diag({s}));
  }
  const double solved = barycenter_fixed_point(samples).barycenter.matrix()(0, 0);
  CHECK(solved == doctest::Approx(mean_root * mean_root).epsilon(1e-12));

  // Scalar functional: mean of (sqrt(s_i) - sqrt(x))^2.
  auto functional = [&](double x) {
    double sum = 0.0;
    for (const auto& s : samples) {
      const double diff = std::sqrt(s.matrix()(0, 0)) - std::sqrt(x);
      sum += diff * diff;
    }
    return sum / static_cast<double>(samples.size());
  };
  double best_x = 0.0, best = INFINITY;
  for (int i = 0; i <= 10000; ++i) {
    const double x = 5.0 * i / 10000.0;
    if (functional(x) < best) {
      best = functional(x);
      best_x = x;
    }
  }
  CHECK(std::abs(best_x - solved) <= 5.0 / 10000.0);
  CHECK(functional(solved) <= best + 1e-12);
}
