#include "bw/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

namespace bw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// A series whose entries are all below this is exact recovery; rate checks
// on it are vacuous.
constexpr double kDegenerateLevel = 1e-8;
constexpr double kDominationTol = 1e-9;
constexpr double kMaxNonconvergedRate = 0.05;
constexpr double kMaxMapFailureRate = 0.01;

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) throw ParseError("not an unsigned integer: '" + text + "'");
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) {
    if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(item);
  }
  return out;
}

std::string join_doubles(const double* data, Index count) {
  std::string out;
  for (Index i = 0; i < count; ++i) {
    if (i) out += ',';
    out += format_double(data[i]);
  }
  return out;
}

std::string fmt(double x) { return format_double(x); }

std::string short_fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Deformation: return "deformation";
    case ModelKind::Wishart: return "wishart";
    case ModelKind::Chi2: return "chi2";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "deformation") return ModelKind::Deformation;
  if (text == "wishart") return ModelKind::Wishart;
  if (text == "chi2") return ModelKind::Chi2;
  throw ParseError("unknown model '" + text + "' (expected deformation, wishart or chi2)");
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (dim < 1) throw InputError("dim must be positive");
  if (model == ModelKind::Chi2 && dim != 2) throw InputError("the chi2 model is two-dimensional; set dim=2");
  if (sample_sizes.empty()) throw InputError("sample_sizes is empty");
  for (std::size_t k = 0; k < sample_sizes.size(); ++k) {
    if (sample_sizes[k] < 1) throw InputError("sample sizes must be positive");
    if (k > 0 && sample_sizes[k] <= sample_sizes[k - 1]) throw InputError("sample_sizes must be strictly increasing");
  }
  if (replications < 30) throw InputError("replications must be at least 30");
  if (threads < 0) throw InputError("threads must be non-negative");
  solver.validate();
  if (model == ModelKind::Deformation) {
    const DeformationSpec spec = deformation_spec();
    if (spec.dim() != dim) throw DimensionMismatchError(dim, spec.dim());
  }
  if (model == ModelKind::Wishart) {
    if (wishart_dof < dim) throw InputError("wishart.dof must be at least dim");
    if (wishart_scale && wishart_scale->dim() != dim) throw DimensionMismatchError(dim, wishart_scale->dim());
  }
  for (const Vector& h : test_vectors) {
    if (h.size() != dim) throw DimensionMismatchError(dim, h.size());
    if (std::abs(h.norm() - 1.0) > 1e-9) throw InputError("test vectors must have unit length");
  }
  for (const SymMatrix& a : functionals) {
    if (a.dim() != dim) throw DimensionMismatchError(dim, a.dim());
  }
  if (instability_dim < 3) throw InputError("instability.d must be at least 3");
  if (!(instability_b > 0.0 && instability_b < 1.0)) throw InputError("instability.b must lie in (0, 1)");
}

DeformationSpec ExperimentConfig::deformation_spec() const {
  if (deformation) return *deformation;
  return DeformationSpec::standard(dim, deformation_amplitude);
}

PsdMatrix ExperimentConfig::wishart_scale_matrix() const {
  return wishart_scale ? *wishart_scale : PsdMatrix::identity(dim);
}

std::vector<Vector> ExperimentConfig::resolved_test_vectors() const {
  if (!test_vectors.empty()) return test_vectors;
  std::vector<Vector> out;
  for (Index i = 0; i < dim; ++i) out.push_back(Vector::Unit(dim, i));
  if (dim > 1) out.push_back(Vector::Ones(dim) / std::sqrt(static_cast<double>(dim)));
  return out;
}

std::vector<SymMatrix> ExperimentConfig::resolved_functionals() const {
  if (!functionals.empty()) return functionals;
  std::vector<SymMatrix> out;
  out.push_back((1.0 / std::sqrt(static_cast<double>(dim))) * SymMatrix::identity(dim));
  if (dim > 1) {
    Matrix e = Matrix::Zero(dim, dim);
    e(0, 1) = e(1, 0) = 1.0 / std::sqrt(2.0);
    out.push_back(SymMatrix(e));
  }
  Matrix e11 = Matrix::Zero(dim, dim);
  e11(0, 0) = 1.0;
  out.push_back(SymMatrix(e11));
  return out;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
  static const std::vector<std::string> known = {
      "model", "dim", "sample_sizes", "replications", "master_seed", "solver.rtol", "solver.max_iter",
      "solver.rank_tol", "deformation.amplitude", "deformation.spec_file", "wishart.dof", "wishart.scale_file",
      "test_vectors", "functionals", "instability.d", "instability.b", "threads"};
  for (const auto& key : kv.keys()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ParseError("unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  if (kv.has("model")) cfg.model = parse_model_kind(kv.get("model"));
  cfg.dim = kv.get_int("dim", cfg.model == ModelKind::Chi2 ? 2 : cfg.dim);
  if (kv.has("sample_sizes")) {
    cfg.sample_sizes.clear();
    for (const auto& item : split(kv.get("sample_sizes"), ',')) {
      cfg.sample_sizes.push_back(static_cast<int>(parse_int(item)));
    }
  }
  cfg.replications = static_cast<int>(kv.get_int("replications", cfg.replications));
  if (kv.has("master_seed")) cfg.master_seed = parse_u64(kv.get("master_seed"));
  cfg.solver.rtol = kv.get_double("solver.rtol", cfg.solver.rtol);
  cfg.solver.max_iter = static_cast<int>(kv.get_int("solver.max_iter", cfg.solver.max_iter));
  cfg.solver.rank_tol = kv.get_double("solver.rank_tol", cfg.solver.rank_tol);
  cfg.deformation_amplitude = kv.get_double("deformation.amplitude", cfg.deformation_amplitude);
  if (kv.has("deformation.spec_file")) {
    cfg.deformation_spec_file = kv.get("deformation.spec_file");
    std::ifstream is(cfg.deformation_spec_file);
    if (!is) throw ParseError("cannot open '" + cfg.deformation_spec_file + "'");
    cfg.deformation = read_deformation_spec(is);
  }
  cfg.wishart_dof = static_cast<int>(kv.get_int("wishart.dof", cfg.wishart_dof));
  if (kv.has("wishart.scale_file")) {
    cfg.wishart_scale_file = kv.get("wishart.scale_file");
    cfg.wishart_scale = load_psd(cfg.wishart_scale_file);
  }
  if (kv.has("test_vectors")) {
    for (const auto& item : split(kv.get("test_vectors"), ';')) {
      const auto entries = parse_double_list(item);
      Vector h = Eigen::Map<const Vector>(entries.data(), static_cast<Index>(entries.size()));
      if (h.norm() == 0.0) throw ParseError("test vector is zero");
      cfg.test_vectors.push_back(h / h.norm());
    }
  }
  if (kv.has("functionals")) {
    for (const auto& item : split(kv.get("functionals"), ';')) {
      const auto entries = parse_double_list(item);
      const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
      if (side * side != static_cast<Index>(entries.size()) || side == 0) {
        throw ParseError("functional must list d*d entries row-major");
      }
      Matrix a(side, side);
      for (Index i = 0; i < side; ++i) {
        for (Index j = 0; j < side; ++j) a(i, j) = entries[static_cast<std::size_t>(i * side + j)];
      }
      try {
        cfg.functionals.push_back(SymMatrix(a));
      } catch (const InputError& e) {
        throw ParseError(std::string("functional: ") + e.what());
      }
    }
  }
  cfg.instability_dim = static_cast<int>(kv.get_int("instability.d", cfg.instability_dim));
  cfg.instability_b = kv.get_double("instability.b", cfg.instability_b);
  cfg.threads = static_cast<int>(kv.get_int("threads", cfg.threads));
  return cfg;
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv;
  kv.set("model", to_string(model));
  kv.set("dim", std::to_string(dim));
  std::string sizes;
  for (std::size_t k = 0; k < sample_sizes.size(); ++k) sizes += (k ? "," : "") + std::to_string(sample_sizes[k]);
  kv.set("sample_sizes", sizes);
  kv.set("replications", std::to_string(replications));
  kv.set("master_seed", std::to_string(master_seed));
  kv.set("solver.rtol", fmt(solver.rtol));
  kv.set("solver.max_iter", std::to_string(solver.max_iter));
  kv.set("solver.rank_tol", fmt(solver.rank_tol));
  if (model == ModelKind::Deformation) {
    if (deformation_spec_file.empty()) {
      kv.set("deformation.amplitude", fmt(deformation_amplitude));
    } else {
      kv.set("deformation.spec_file", deformation_spec_file);
    }
  }
  if (model == ModelKind::Wishart) {
    kv.set("wishart.dof", std::to_string(wishart_dof));
    if (!wishart_scale_file.empty()) kv.set("wishart.scale_file", wishart_scale_file);
  }
  std::string hs;
  for (const Vector& h : resolved_test_vectors()) {
    if (!hs.empty()) hs += ';';
    hs += join_doubles(h.data(), h.size());
  }
  kv.set("test_vectors", hs);
  std::string as;
  for (const SymMatrix& a : resolved_functionals()) {
    if (!as.empty()) as += ';';
    // Row-major; the matrix is symmetric so storage order does not matter.
    as += join_doubles(a.matrix().data(), a.matrix().size());
  }
  kv.set("functionals", as);
  kv.set("instability.d", std::to_string(instability_dim));
  kv.set("instability.b", fmt(instability_b));
  return kv;
}

// ---------------------------------------------------------------------------
// Statistics

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double iqr(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
}

GaussianitySummary gaussianity_summary(std::vector<double> values) {
  const std::size_t n = values.size();
  if (n < 30) throw InputError("gaussianity summary needs at least 30 values, got " + std::to_string(n));
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("gaussianity summary: non-finite value");
  }
  GaussianitySummary s;
  const double N = static_cast<double>(n);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / N;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double c = v - s.mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  s.sd = std::sqrt(m2 / (N - 1.0));
  m2 /= N;
  m3 /= N;
  m4 /= N;
  if (!(m2 > 0.0) || s.sd <= 1e-300) {
    s.sd = 0.0;
    s.degenerate = true;
    return s;
  }
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::sort(values.begin(), values.end());
  const boost::math::normal_distribution<double> normal;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = boost::math::quantile(normal, (static_cast<double>(i) + 0.5) / N);
  // Quantiles are symmetric about zero, so their mean is zero up to rounding;
  // centre both anyway.
  double qm = 0.0;
  for (double x : q) qm += x;
  qm /= N;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = q[i] - qm;
    const double y = values[i] - s.mean;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  s.qq_corr = sxy / std::sqrt(sxx * syy);
  return s;
}

// ---------------------------------------------------------------------------
// Report output

bool ExperimentReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void ExperimentReport::write_csv(std::ostream& os) const {
  os << "# kind=" << kind << '\n';
  config.write(os, "# ");
  os << "n,replication,seed,status,iterations";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (const ReportRow& row : rows) {
    os << row.n << ',' << row.replication << ',' << row.seed << ',' << row.status << ',' << row.iterations;
    for (double v : row.values) os << ',' << format_double(v);
    os << '\n';
  }
}

void ExperimentReport::write_summary(std::ostream& os) const {
  os << "kind=" << kind << '\n';
  config.write(os, "config.");
  summary.write(os);
  for (const Check& c : checks) {
    os << "check." << c.name << '=' << (c.pass ? "pass" : "fail") << '\n';
    os << "check." << c.name << ".detail=" << c.detail << '\n';
  }
  os << "all_pass=" << (all_pass() ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Replication core

namespace {

struct Draws {
  std::vector<PsdMatrix> samples;
  std::vector<PsdMatrix> maps;  // deformation model only
};

class Sampler {
 public:
  explicit Sampler(const ExperimentConfig& cfg) : model_(cfg.model), dof_(cfg.wishart_dof) {
    if (model_ == ModelKind::Deformation) spec_ = cfg.deformation_spec();
    if (model_ == ModelKind::Wishart) scale_ = cfg.wishart_scale_matrix();
  }

  void draw(SeededRng& rng, Draws& out) const {
    switch (model_) {
      case ModelKind::Deformation: {
        DeformationDraw d = sample_template_deformation(spec_, rng);
        out.samples.push_back(std::move(d.sigma));
        out.maps.push_back(std::move(d.map));
        break;
      }
      case ModelKind::Wishart: out.samples.push_back(sample_wishart(scale_, dof_, rng)); break;
      case ModelKind::Chi2: out.samples.push_back(degenerate_chi2_example(rng)); break;
    }
  }

 private:
  ModelKind model_;
  int dof_;
  DeformationSpec spec_;
  PsdMatrix scale_;
};

struct RowContext {
  int n;
  std::span<const PsdMatrix> samples;
  const Draws& draws;
  const BarycenterResult& result;
};

// Fills row.values (and may set row.status).
using RowFn = std::function<void(const RowContext&, ReportRow&)>;

std::vector<ReportRow> run_replications(const ExperimentConfig& cfg, const RowFn& fn) {
  const Sampler sampler(cfg);
  const int reps = cfg.replications;
  const std::size_t sizes = cfg.sample_sizes.size();
  std::vector<ReportRow> rows(sizes * static_cast<std::size_t>(reps));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  int first_failed = reps;

  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      try {
        const std::uint64_t seed = mix64(cfg.master_seed, static_cast<std::uint64_t>(r));
        SeededRng rng(seed);
        Draws draws;
        for (std::size_t k = 0; k < sizes; ++k) {
          const int n = cfg.sample_sizes[k];
          while (static_cast<int>(draws.samples.size()) < n) sampler.draw(rng, draws);
          const std::span<const PsdMatrix> samples(draws.samples.data(), static_cast<std::size_t>(n));
          const BarycenterResult result = barycenter_fixed_point(samples, cfg.solver);
          ReportRow& row = rows[k * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
          row.n = n;
          row.replication = r;
          row.seed = seed;
          row.iterations = result.iterations;
          row.status = result.converged ? "ok" : "nonconverged";
          fn(RowContext{n, samples, draws, result}, row);
        }
      } catch (...) {
        // Keep the failure of the lowest replication so the error reported
        // does not depend on scheduling.
        std::lock_guard<std::mutex> lock(error_mutex);
        if (r < first_failed) {
          first_failed = r;
          error = std::current_exception();
        }
      }
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

void enforce_failure_rates(const std::vector<ReportRow>& rows) {
  std::size_t nonconverged = 0, map_failures = 0;
  std::string examples;
  for (const ReportRow& row : rows) {
    if (row.status == "ok") continue;
    if (row.status == "nonconverged") ++nonconverged;
    if (row.status == "map_failure") ++map_failures;
    if (examples.size() < 200) {
      examples += " (n=" + std::to_string(row.n) + " rep=" + std::to_string(row.replication) +
                  " seed=" + std::to_string(row.seed) + " " + row.status + ")";
    }
  }
  const double total = static_cast<double>(rows.size());
  if (static_cast<double>(nonconverged) > kMaxNonconvergedRate * total) {
    throw ExperimentError("solver failed to converge in " + std::to_string(nonconverged) + " of " +
                          std::to_string(rows.size()) + " runs;" + examples);
  }
  if (static_cast<double>(map_failures) > kMaxMapFailureRate * total) {
    throw ExperimentError("optimal map undefined in " + std::to_string(map_failures) + " of " +
                          std::to_string(rows.size()) + " runs;" + examples);
  }
}

class Aggregates {
 public:
  Aggregates(const ExperimentConfig& cfg, const ExperimentReport& report) : sizes_(cfg.sample_sizes) {
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      std::vector<std::vector<double>> per_n(sizes_.size());
      for (const ReportRow& row : report.rows) {
        if (row.status != "ok") continue;
        const auto k = static_cast<std::size_t>(
            std::find(sizes_.begin(), sizes_.end(), row.n) - sizes_.begin());
        per_n[k].push_back(row.values[c]);
      }
      values_[report.columns[c]] = std::move(per_n);
    }
  }

  const std::vector<double>& values(const std::string& column, std::size_t k) const {
    return values_.at(column)[k];
  }

  std::vector<double> abs_values(const std::string& column, std::size_t k) const {
    std::vector<double> out = values(column, k);
    for (double& v : out) v = std::abs(v);
    return out;
  }

  std::vector<double> medians(const std::string& column, bool absolute = false) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      out.push_back(median(absolute ? abs_values(column, k) : values(column, k)));
    }
    return out;
  }

  bool degenerate(const std::string& column) const {
    for (const auto& series : values_.at(column)) {
      for (double v : series) {
        if (!(std::abs(v) <= kDegenerateLevel)) return false;
      }
    }
    return true;
  }

  void write(KeyValues& summary) const {
    for (const auto& [column, per_n] : values_) {
      for (std::size_t k = 0; k < sizes_.size(); ++k) {
        const std::string prefix = "n" + std::to_string(sizes_[k]) + "." + column + ".";
        const auto& v = per_n[k];
        summary.set(prefix + "count", std::to_string(v.size()));
        summary.set(prefix + "median", fmt(median(v)));
        summary.set(prefix + "iqr", fmt(iqr(v)));
        if (v.size() >= 30) {
          const GaussianitySummary g = gaussianity_summary(v);
          summary.set(prefix + "skewness", fmt(g.skewness));
          summary.set(prefix + "excess_kurtosis", fmt(g.excess_kurtosis));
        }
      }
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }

 private:
  std::vector<int> sizes_;
  std::map<std::string, std::vector<std::vector<double>>> values_;
};

std::string list_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

Check decreasing_check(const Aggregates& agg, const std::string& column, bool absolute = false) {
  Check c{column + ".decreasing", false, ""};
  if (agg.degenerate(column)) {
    c.pass = true;
    c.detail = "exact recovery (all values <= 1e-8)";
    return c;
  }
  const auto m = agg.medians(column, absolute);
  c.pass = true;
  for (std::size_t k = 1; k < m.size(); ++k) {
    if (!(m[k] < m[k - 1])) c.pass = false;
  }
  c.detail = "medians " + list_doubles(m);
  return c;
}

// median(last n) / median(first n) within [lo, hi].
Check ratio_check(const Aggregates& agg, const std::string& column, double lo, double hi, bool absolute = false) {
  Check c{column + ".ratio", false, ""};
  if (agg.degenerate(column)) {
    c.pass = true;
    c.detail = "exact recovery (all values <= 1e-8)";
    return c;
  }
  const auto m = agg.medians(column, absolute);
  const double ratio = m.back() / m.front();
  c.pass = ratio >= lo && ratio <= hi;
  c.detail = "ratio " + fmt(ratio) + " band [" + short_fmt(lo) + " " + short_fmt(hi) + "]";
  return c;
}

ExperimentReport make_report(const std::string& kind, const ExperimentConfig& cfg,
                             std::vector<std::string> columns) {
  ExperimentReport report;
  report.kind = kind;
  report.config = cfg.to_key_values();
  report.columns = std::move(columns);
  return report;
}

PsdMatrix ground_truth(const ExperimentConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::Deformation: return cfg.deformation_spec().xi;
    case ModelKind::Chi2: return degenerate_chi2_barycenter();
    case ModelKind::Wishart: break;
  }
  throw InputError("the " + to_string(cfg.model) + " model has no known barycentre");
}

void require_deformation(const ExperimentConfig& cfg, const std::string& what) {
  if (cfg.model != ModelKind::Deformation) throw InputError(what + " requires the deformation model");
}

}  // namespace

ExperimentReport run_lln(const ExperimentConfig& cfg) {
  cfg.validate();
  const PsdMatrix truth = ground_truth(cfg);
  const double rank_tol = cfg.solver.rank_tol;

  ExperimentReport report = make_report("lln", cfg, {"error", "dominated"});
  report.rows = run_replications(cfg, [&](const RowContext& ctx, ReportRow& row) {
    const PsdMatrix& xi_hat = ctx.result.barycenter;
    row.values = {bw_distance_procrustes(truth, xi_hat, rank_tol),
                  check_domination(xi_hat, ctx.samples, kDominationTol) ? 1.0 : 0.0};
  });
  enforce_failure_rates(report.rows);

  const Aggregates agg(cfg, report);
  agg.write(report.summary);
  report.checks.push_back(decreasing_check(agg, "error"));
  report.checks.push_back(ratio_check(agg, "error", 0.0, 0.5));

  std::size_t dominated = 0, total = 0;
  for (const ReportRow& row : report.rows) {
    ++total;
    if (row.values[1] == 1.0) ++dominated;
  }
  report.checks.push_back(Check{"domination", dominated == total,
                                std::to_string(dominated) + " of " + std::to_string(total) + " runs"});
  return report;
}

ExperimentReport run_clt(const ExperimentConfig& cfg) {
  cfg.validate();
  require_deformation(cfg, "the CLT study");
  const PsdMatrix truth = ground_truth(cfg);
  const double rank_tol = cfg.solver.rank_tol;
  const Matrix truth_half = matrix_sqrt(truth, rank_tol).matrix();
  const auto functionals = cfg.resolved_functionals();

  std::vector<std::string> columns = {"error", "scaled_error", "hs_half_error", "trace_gap"};
  for (std::size_t k = 0; k < functionals.size(); ++k) columns.push_back("proj_" + std::to_string(k));
  ExperimentReport report = make_report("clt", cfg, columns);

  // Raw ||H_n||_HS - Pi per row; must stay above -1e-9.
  std::vector<double> lemma_margin(cfg.sample_sizes.size() * static_cast<std::size_t>(cfg.replications));
  report.rows = run_replications(cfg, [&](const RowContext& ctx, ReportRow& row) {
    const PsdMatrix& xi_hat = ctx.result.barycenter;
    const double root_n = std::sqrt(static_cast<double>(ctx.n));
    const double dist = bw_distance_procrustes(truth, xi_hat, rank_tol);
    const Matrix h = truth_half - matrix_sqrt(xi_hat, rank_tol).matrix();
    const double h_norm = h.norm();
    row.values = {dist, root_n * dist, root_n * h_norm, root_n * (truth.trace() - xi_hat.trace())};
    for (const SymMatrix& a : functionals) row.values.push_back(root_n * h.cwiseProduct(a.matrix()).sum());
    const auto k = static_cast<std::size_t>(
        std::find(cfg.sample_sizes.begin(), cfg.sample_sizes.end(), ctx.n) - cfg.sample_sizes.begin());
    lemma_margin[k * static_cast<std::size_t>(cfg.replications) + static_cast<std::size_t>(row.replication)] =
        h_norm - dist;
  });
  enforce_failure_rates(report.rows);

  const Aggregates agg(cfg, report);
  agg.write(report.summary);
  report.checks.push_back(ratio_check(agg, "scaled_error", 0.5, 2.0));
  report.checks.push_back(ratio_check(agg, "hs_half_error", 0.5, 2.0));
  {
    Check c = ratio_check(agg, "trace_gap", 0.5, 2.0, true);
    c.name = "abs_trace_gap.ratio";
    report.checks.push_back(c);
  }

  const std::size_t last = cfg.sample_sizes.size() - 1;
  for (std::size_t k = 0; k < functionals.size(); ++k) {
    const std::string col = "proj_" + std::to_string(k);
    Check c{col + ".gaussian", false, ""};
    try {
      const GaussianitySummary g = gaussianity_summary(agg.values(col, last));
      const std::string prefix = "gaussianity." + col + ".";
      report.summary.set(prefix + "mean", fmt(g.mean));
      report.summary.set(prefix + "sd", fmt(g.sd));
      report.summary.set(prefix + "skewness", fmt(g.skewness));
      report.summary.set(prefix + "excess_kurtosis", fmt(g.excess_kurtosis));
      report.summary.set(prefix + "qq_corr", fmt(g.qq_corr));
      report.summary.set(prefix + "degenerate", g.degenerate ? "1" : "0");
      if (g.degenerate || agg.degenerate(col)) {
        c.pass = true;
        c.detail = "exact recovery (no fluctuation)";
      } else {
        c.pass = std::abs(g.skewness) <= 0.5 && std::abs(g.excess_kurtosis) <= 1.0 && g.qq_corr >= 0.99;
        c.detail = "skewness " + fmt(g.skewness) + " excess_kurtosis " + fmt(g.excess_kurtosis) + " qq_corr " +
                   fmt(g.qq_corr);
      }
    } catch (const InputError& e) {
      c.detail = e.what();
    }
    report.checks.push_back(c);
  }

  const double worst = *std::min_element(lemma_margin.begin(), lemma_margin.end());
  report.checks.push_back(Check{"hs_half_error_dominates_distance", worst >= -1e-9,
                                "min(||H_n||_HS - distance) " + fmt(worst)});
  return report;
}

ExperimentReport run_map_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  require_deformation(cfg, "the map-convergence study");
  const PsdMatrix truth = ground_truth(cfg);
  const double rank_tol = cfg.solver.rank_tol;
  const Matrix truth_half = matrix_sqrt(truth, rank_tol).matrix();
  const auto test_vectors = cfg.resolved_test_vectors();

  std::vector<std::string> columns;
  for (std::size_t k = 0; k < test_vectors.size(); ++k) columns.push_back("map_err_h" + std::to_string(k));
  columns.push_back("tangent_err");
  ExperimentReport report = make_report("maps-conv", cfg, columns);

  report.rows = run_replications(cfg, [&](const RowContext& ctx, ReportRow& row) {
    const PsdMatrix& sigma1 = ctx.draws.samples.front();
    const Matrix& t_true = ctx.draws.maps.front().matrix();
    row.values.assign(test_vectors.size() + 1, kNaN);
    Matrix t_hat;
    try {
      t_hat = optimal_map(ctx.result.barycenter, sigma1, rank_tol).matrix.matrix();
    } catch (const KernelMismatchError&) {
      row.status = "map_failure";
      return;
    }
    const Matrix diff = t_hat - t_true;
    for (std::size_t k = 0; k < test_vectors.size(); ++k) row.values[k] = (diff * test_vectors[k]).norm();
    row.values.back() = (diff * truth_half).norm();
  });
  enforce_failure_rates(report.rows);

  const Aggregates agg(cfg, report);
  agg.write(report.summary);
  for (const auto& col : columns) {
    report.checks.push_back(decreasing_check(agg, col));
    report.checks.push_back(ratio_check(agg, col, 0.0, 0.6));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Instability

void InstabilityReport::write_csv(std::ostream& os) const {
  os << "# kind=instability\n";
  os << "# instability.d=" << d << '\n';
  os << "# instability.b=" << format_double(b) << '\n';
  os << "n,gap,expected_gap,distance,expected_distance\n";
  for (const auto& r : rows) {
    os << r.n << ',' << format_double(r.gap) << ',' << format_double(r.expected_gap) << ','
       << format_double(r.distance) << ',' << format_double(r.expected_distance) << '\n';
  }
}

void InstabilityReport::write_summary(std::ostream& os) const {
  os << "kind=instability\n";
  os << "config.instability.d=" << d << '\n';
  os << "config.instability.b=" << format_double(b) << '\n';
  os << "max_gap_error=" << format_double(max_gap_error) << '\n';
  os << "max_distance_error=" << format_double(max_distance_error) << '\n';
  os << "max_untruncated_deviation=" << format_double(max_untruncated_deviation) << '\n';
  os << "tolerance=" << format_double(kInstabilityTol) << '\n';
  os << "check.gap=" << (max_gap_error <= kInstabilityTol ? "pass" : "fail") << '\n';
  os << "check.distance=" << (max_distance_error <= kInstabilityTol ? "pass" : "fail") << '\n';
  os << "all_pass=" << (max_gap_error <= kInstabilityTol && max_distance_error <= kInstabilityTol ? 1 : 0)
     << '\n';
}

InstabilityReport run_instability(Index d, double b) {
  if (d < 3) throw InputError("instability: d must be at least 3");
  const InstabilityFamily fam = instability_sequence(d, b, geometric_profile(d));
  InstabilityReport report;
  report.d = d;
  report.b = b;
  const SymMatrix id = SymMatrix::identity(d);
  for (Index n = 1; n < d; ++n) {
    const PsdMatrix& xi_n = fam.xi_n[static_cast<std::size_t>(n - 1)];
    const TransportMap t = optimal_map(xi_n, fam.xi, fam.rank_tol);
    InstabilityRow row;
    row.n = static_cast<int>(n);
    row.gap = op_norm(t.matrix.sym() - id);
    row.expected_gap = fam.expected_gap();
    row.distance = bw_distance_procrustes(xi_n, fam.xi, fam.rank_tol);
    row.expected_distance = fam.expected_distance(n);
    report.max_gap_error = std::max(report.max_gap_error, std::abs(row.gap - row.expected_gap));
    report.max_distance_error = std::max(report.max_distance_error, std::abs(row.distance - row.expected_distance));
    report.max_untruncated_deviation =
        std::max(report.max_untruncated_deviation,
                 std::abs(row.distance - (1.0 - b) * std::pow(2.0, -0.5 * static_cast<double>(n))));
    report.rows.push_back(row);
  }
  if (report.max_gap_error > kInstabilityTol) {
    throw ExperimentError("instability: op-norm gap off by " + format_double(report.max_gap_error));
  }
  if (report.max_distance_error > kInstabilityTol) {
    throw ExperimentError("instability: distance off by " + format_double(report.max_distance_error));
  }
  return report;
}

}  // namespace bw
