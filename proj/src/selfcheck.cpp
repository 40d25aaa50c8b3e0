#include "bw/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bw/io.hpp"
#include "bw/models.hpp"

namespace bw {

// ---------------------------------------------------------------------------
// Generators

Matrix random_orthogonal(Index d, SeededRng& rng) {
  Matrix z(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) z(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

SymMatrix random_symmetric(Index d, SeededRng& rng) {
  Matrix z(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) z(i, j) = rng.normal();
  }
  Matrix s = z + z.transpose();
  s /= s.norm();
  return SymMatrix::symmetrize(s);
}

PsdMatrix random_pd(Index d, SeededRng& rng, double lo, double hi) {
  Vector lambda(d);
  for (Index i = 0; i < d; ++i) lambda(i) = rng.uniform(lo, hi);
  return PsdMatrix::from_spectrum(lambda, random_orthogonal(d, rng));
}

PsdMatrix random_psd(Index d, Index rank, SeededRng& rng) {
  Matrix x(d, rank);
  for (Index j = 0; j < rank; ++j) {
    for (Index i = 0; i < d; ++i) x(i, j) = rng.normal();
  }
  return nearest_psd(x * x.transpose() / static_cast<double>(rank), 1.0);
}

namespace {

Index uniform_index(SeededRng& rng, Index lo, Index hi) {
  const double u = rng.uniform(0.0, 1.0);
  return std::min(hi, lo + static_cast<Index>(u * static_cast<double>(hi - lo + 1)));
}

PsdMatrix embed(const Matrix& q, Index rank, const PsdMatrix& core) {
  const Matrix basis = q.leftCols(rank);
  return nearest_psd(basis * core.matrix() * basis.transpose(), core.spectrum().max_eigenvalue());
}

}  // namespace

PsdPair random_pair(Index d, SeededRng& rng, int index) {
  const auto kind = static_cast<PairKind>(index % 4);
  switch (kind) {
    case PairKind::FullFull:
      return {random_pd(d, rng), random_psd(d, d + 2, rng), kind};
    case PairKind::FullDeficient:
      return {random_pd(d, rng), random_psd(d, uniform_index(rng, 1, d - 1), rng), kind};
    case PairKind::Nested: {
      const Matrix q = random_orthogonal(d, rng);
      const Index r = uniform_index(rng, 1, d - 1);
      const Index s = uniform_index(rng, 1, r);
      PsdMatrix f = embed(q, r, random_pd(r, rng));
      PsdMatrix g = embed(q, s, random_pd(s, rng));
      return {std::move(f), std::move(g), kind};
    }
    case PairKind::Arbitrary:
      break;
  }
  PsdMatrix f = random_psd(d, uniform_index(rng, 1, d - 1), rng);
  PsdMatrix g = random_psd(d, uniform_index(rng, 1, d - 1), rng);
  return {std::move(f), std::move(g), PairKind::Arbitrary};
}

double bw_distance_sign_mutant(const PsdMatrix& f, const PsdMatrix& g) {
  const Matrix gh = matrix_sqrt(g).matrix();
  const PsdMatrix inner =
      nearest_psd(gh * f.matrix() * gh, g.spectrum().max_eigenvalue() * f.spectrum().max_eigenvalue());
  const double cross = matrix_sqrt(inner).trace();
  return std::sqrt(std::max(0.0, f.trace() + g.trace() + 2.0 * cross));
}

// ---------------------------------------------------------------------------
// Suites

namespace {

DistanceFn distance_of(const SelfcheckOptions& opt) {
  if (opt.distance) return opt.distance;
  return [](const PsdMatrix& f, const PsdMatrix& g) { return bw_distance(f, g); };
}

// Case i gets its own stream, so suites sharing a seed see the same inputs.
SeededRng case_rng(const SelfcheckOptions& opt, std::uint64_t suite, int i) {
  return SeededRng(mix64(opt.seed, suite, static_cast<std::uint64_t>(i)));
}

Index case_dim(const SelfcheckOptions& opt, SeededRng& rng) {
  return uniform_index(rng, opt.min_dim, opt.max_dim);
}

constexpr std::uint64_t kPairStream = 1;
constexpr std::uint64_t kMonotoneStream = 2;
constexpr std::uint64_t kDerivativeStream = 3;
constexpr std::uint64_t kTraceStream = 4;
constexpr std::uint64_t kCommutingStream = 5;
constexpr std::uint64_t kDescentStream = 6;

class Tally {
 public:
  explicit Tally(std::string name) { result_.name = std::move(name); }

  void record(int case_index, bool ok, double margin, const std::string& what) {
    result_.worst = std::max(result_.worst, margin);
    if (ok) return;
    ++result_.failures;
    if (first_.empty()) first_ = "case " + std::to_string(case_index) + ": " + what;
  }
  void next_case() { ++result_.cases; }

  SuiteResult finish() {
    result_.detail = result_.failures == 0 ? "worst margin " + format_double(result_.worst)
                                           : std::to_string(result_.failures) + " failures; first " + first_;
    return result_;
  }

 private:
  SuiteResult result_;
  std::string first_;
};

// Functional values along the iterates never increase (relative slack).
bool monotone_descent(const std::vector<double>& trace, double& worst_rise) {
  worst_rise = 0.0;
  if (trace.empty()) return true;
  const double slack = 1e-10 * std::max(1.0, trace.front());
  bool ok = true;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double rise = trace[k] - trace[k - 1];
    worst_rise = std::max(worst_rise, rise);
    if (rise > slack) ok = false;
  }
  return ok;
}

}  // namespace

SuiteResult suite_lemma1(const SelfcheckOptions& opt) {
  const DistanceFn dist = distance_of(opt);
  Tally tally("lemma1_inequalities");
  for (int i = 0; i < opt.pairs; ++i) {
    SeededRng rng = case_rng(opt, kPairStream, i);
    const PsdPair p = random_pair(case_dim(opt, rng), rng, i);
    const Lemma1Bounds b = lemma1_bounds(p.f, p.g, dist(p.f, p.g));
    const double margin = std::max({b.sqrt_gap - b.trace_gap, b.trace_gap - b.trace_bound,
                                    b.distance * b.distance - b.sqrt_gap});
    tally.next_case();
    tally.record(i, b.holds(1e-10), margin, "chain violated by " + format_double(margin));
  }
  return tally.finish();
}

SuiteResult suite_cross_form(const SelfcheckOptions& opt) {
  const DistanceFn dist = distance_of(opt);
  Tally tally("distance_cross_form");
  for (int i = 0; i < opt.pairs; ++i) {
    SeededRng rng = case_rng(opt, kPairStream, i);
    const PsdPair p = random_pair(case_dim(opt, rng), rng, i);
    const double closed = dist(p.f, p.g);
    const double tol = 1e-8 * (1.0 + closed);
    const double procrustes = bw_distance_procrustes(p.f, p.g);
    double gap = std::abs(closed - procrustes);
    if (p.map_defined()) gap = std::max(gap, std::abs(closed - bw_distance_via_map(p.f, p.g)));
    tally.next_case();
    tally.record(i, gap <= tol, gap / (1.0 + closed), "forms disagree by " + format_double(gap));
  }
  return tally.finish();
}

SuiteResult suite_monotonicity(const SelfcheckOptions& opt) {
  Tally tally("operator_monotonicity");
  for (int i = 0; i < opt.monotone_pairs; ++i) {
    SeededRng rng = case_rng(opt, kMonotoneStream, i);
    const Index d = case_dim(opt, rng);
    const PsdMatrix a = i % 2 ? random_psd(d, uniform_index(rng, 1, d), rng) : random_pd(d, rng);
    const PsdMatrix gap = random_psd(d, uniform_index(rng, 1, d), rng);
    const PsdMatrix b = nearest_psd(a.matrix() + gap.matrix(), 1.0);
    Matrix c(d, d);
    for (Index col = 0; col < d; ++col) {
      for (Index row = 0; row < d; ++row) c(row, col) = rng.normal();
    }
    const bool sqrt_ok = loewner_leq(matrix_sqrt(a).sym(), matrix_sqrt(b).sym(), 1e-8);
    const bool conj_ok = loewner_leq(SymMatrix::symmetrize(c.transpose() * a.matrix() * c),
                                     SymMatrix::symmetrize(c.transpose() * b.matrix() * c), 1e-8);
    tally.next_case();
    tally.record(i, sqrt_ok && conj_ok, 0.0, sqrt_ok ? "conjugation order broken" : "square-root order broken");
  }
  return tally.finish();
}

SuiteResult suite_sqrt_derivative(const SelfcheckOptions& opt) {
  Tally tally("sqrt_derivative");
  for (int i = 0; i < opt.derivative_cases; ++i) {
    SeededRng rng = case_rng(opt, kDerivativeStream, i);
    const Index d = case_dim(opt, rng);
    const PsdMatrix f = random_pd(d, rng, 0.2, 2.0);
    const SymMatrix h = random_symmetric(d, rng);
    const Matrix fh = matrix_sqrt(f).matrix();
    const double h_norm = h.matrix().norm();

    const Matrix dm = sqrt_frechet_derivative(f, h).matrix();
    const double residual = (fh * dm + dm * fh - h.matrix()).norm() / h_norm;

    const double t = 1e-5;
    const Matrix plus = matrix_sqrt(PsdMatrix(f.sym() + t * h)).matrix();
    const Matrix minus = matrix_sqrt(PsdMatrix(f.sym() - t * h)).matrix();
    const double fd = ((plus - minus) / (2.0 * t) - dm).norm() / dm.norm();

    const Matrix contracted = sqrt_frechet_derivative(f, Matrix(fh * h.matrix()));
    const double excess = contracted.norm() - h_norm;

    tally.next_case();
    std::ostringstream what;
    what << "residual " << residual << " fd " << fd << " contraction excess " << excess;
    tally.record(i, residual <= 1e-9 && fd <= 1e-5 && excess <= 1e-10, std::max({residual, fd, excess}),
                 what.str());
  }
  return tally.finish();
}

SuiteResult suite_trace_identity(const SelfcheckOptions& opt) {
  Tally tally("trace_identity");
  const DeformationSpec spec = DeformationSpec::standard(4);
  BarycenterConfig solver;
  solver.rtol = 1e-13;
  solver.max_iter = 2000;
  for (int i = 0; i < opt.trace_sets; ++i) {
    SeededRng rng = case_rng(opt, kTraceStream, i);
    std::vector<PsdMatrix> samples;
    for (int k = 0; k < 20; ++k) samples.push_back(sample_template_deformation(spec, rng).sigma);
    const BarycenterResult res = barycenter_fixed_point(samples, solver);
    std::vector<SymMatrix> directions{SymMatrix::identity(4)};
    for (int k = 0; k < 5; ++k) directions.push_back(random_symmetric(4, rng));
    tally.next_case();
    for (const SymMatrix& h : directions) {
      const double fd = trace_derivative_check(res.barycenter, samples, h, 1e-5);
      const double err = std::abs(fd + 0.5 * h.trace());
      tally.record(i, res.converged && err <= 1e-5, err,
                   "derivative " + format_double(fd) + " vs " + format_double(-0.5 * h.trace()));
    }
  }
  return tally.finish();
}

SuiteResult suite_commuting_solver(const SelfcheckOptions& opt) {
  Tally tally("commuting_barycentre");
  const Index max_dim = std::min<Index>(opt.max_dim, 8);
  for (int i = 0; i < opt.solver_sets; ++i) {
    SeededRng rng = case_rng(opt, kCommutingStream, i);
    const Index d = uniform_index(rng, std::min<Index>(opt.min_dim, max_dim), max_dim);
    const int n = static_cast<int>(uniform_index(rng, 1, 20));
    const Matrix q = random_orthogonal(d, rng);
    // Every third set shares a null direction.
    const Index null_dir = i % 3 == 0 ? uniform_index(rng, 0, d - 1) : -1;
    std::vector<PsdMatrix> samples;
    for (int k = 0; k < n; ++k) {
      Vector lambda(d);
      for (Index j = 0; j < d; ++j) lambda(j) = j == null_dir ? 0.0 : rng.uniform(0.0, 2.0);
      samples.push_back(PsdMatrix::from_spectrum(lambda, q));
    }
    const BarycenterResult res = barycenter_fixed_point(samples);
    const PsdMatrix oracle = commuting_barycenter_oracle(samples);
    const double err = bw_distance_procrustes(res.barycenter, oracle);
    double rise = 0.0;
    const bool descent = monotone_descent(res.functional_trace, rise);
    const bool dominated = check_domination(res.barycenter, samples, 1e-9);
    tally.next_case();
    std::ostringstream what;
    what << "converged " << res.converged << " oracle distance " << err << " rise " << rise << " dominated "
         << dominated;
    tally.record(i, res.converged && err <= 1e-7 && descent && dominated, err, what.str());
  }
  return tally.finish();
}

SuiteResult suite_descent_domination(const SelfcheckOptions& opt) {
  Tally tally("descent_domination");
  const Index max_dim = std::min<Index>(opt.max_dim, 6);
  for (int i = 0; i < opt.solver_sets; ++i) {
    SeededRng rng = case_rng(opt, kDescentStream, i);
    const Index d = uniform_index(rng, std::min<Index>(opt.min_dim, max_dim), max_dim);
    const int n = static_cast<int>(uniform_index(rng, 3, 10));
    std::vector<PsdMatrix> samples;
    for (int k = 0; k < n; ++k) {
      samples.push_back(k % 2 ? random_psd(d, uniform_index(rng, 1, d), rng) : random_pd(d, rng));
    }
    const BarycenterResult res = barycenter_fixed_point(samples);
    double rise = 0.0;
    const bool descent = monotone_descent(res.functional_trace, rise);
    const bool dominated = check_domination(res.barycenter, samples, 1e-9);
    tally.next_case();
    std::ostringstream what;
    what << "converged " << res.converged << " rise " << rise << " dominated " << dominated;
    tally.record(i, res.converged && descent && dominated, rise, what.str());
  }
  return tally.finish();
}

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& opt) {
  return {suite_lemma1(opt),          suite_monotonicity(opt),     suite_sqrt_derivative(opt),
          suite_trace_identity(opt),  suite_cross_form(opt),       suite_commuting_solver(opt),
          suite_descent_domination(opt)};
}

}  // namespace bw
