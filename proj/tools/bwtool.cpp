// bwtool: matrix I/O, Bures-Wasserstein geometry, barycentres and the
// Monte Carlo studies from the command line.
//
// Exit codes:
//   0  success (experiments: every check passed)
//   1  experiment finished but some check failed; unexpected internal error
//   2  parse error or invalid input / usage
//   3  dimension mismatch
//   4  kernel mismatch (optimal map undefined)
//   5  barycentre solver did not converge
//   6  experiment error
//   7  selfcheck failure

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/experiments.hpp"
#include "bw/io.hpp"
#include "bw/metric.hpp"
#include "bw/selfcheck.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int {
  kOk = 0,
  kChecksFailed = 1,
  kParse = 2,
  kDimension = 3,
  kKernel = 4,
  kNonconverged = 5,
  kExperiment = 6,
  kSelfcheck = 7,
};

// When stdout carries a CSV the echo becomes '#' comment lines.
bool g_echo_as_comment = false;

void echo(const std::string& key, const std::string& value) {
  std::cout << (g_echo_as_comment ? "# config." : "config.") << key << '=' << value << '\n';
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

void write_matrix_out(const std::string& out, const std::string& name, const bw::Matrix& m) {
  if (out.empty()) {
    std::cout << "payload=" << name << '\n';
    bw::write_bwmat(std::cout, m);
  } else {
    bw::save_bwmat(out, m);
  }
}

std::vector<bw::PsdMatrix> load_all(const std::vector<std::string>& files) {
  std::vector<bw::PsdMatrix> out;
  for (const auto& f : files) out.push_back(bw::load_psd(f));
  for (const auto& m : out) {
    if (m.dim() != out.front().dim()) throw bw::DimensionMismatchError(out.front().dim(), m.dim());
  }
  return out;
}

// --- geometry --------------------------------------------------------------

struct DistArgs {
  std::string f, g, form = "all";
};

int cmd_dist(const DistArgs& a) {
  echo("command", "dist");
  echo("f", a.f);
  echo("g", a.g);
  echo("form", a.form);
  const bw::PsdMatrix f = bw::load_psd(a.f);
  const bw::PsdMatrix g = bw::load_psd(a.g);
  if (f.dim() != g.dim()) throw bw::DimensionMismatchError(f.dim(), g.dim());
  if (a.form == "closed") {
    std::cout << "closed=" << bw::format_double(bw::bw_distance(f, g)) << '\n';
  } else if (a.form == "procrustes") {
    std::cout << "procrustes=" << bw::format_double(bw::bw_distance_procrustes(f, g)) << '\n';
  } else if (a.form == "map") {
    std::cout << "map=" << bw::format_double(bw::bw_distance_via_map(f, g)) << '\n';
  } else {
    const double closed = bw::bw_distance(f, g);
    const double procrustes = bw::bw_distance_procrustes(f, g);
    std::cout << "closed=" << bw::format_double(closed) << '\n';
    std::cout << "procrustes=" << bw::format_double(procrustes) << '\n';
    double discrepancy = std::abs(closed - procrustes);
    try {
      const double map = bw::bw_distance_via_map(f, g);
      std::cout << "map=" << bw::format_double(map) << '\n';
      discrepancy = std::max({discrepancy, std::abs(closed - map), std::abs(procrustes - map)});
    } catch (const bw::KernelMismatchError& e) {
      std::cout << "map=undefined\n";
      std::cerr << "map form skipped: " << e.what() << '\n';
    }
    std::cout << "max_discrepancy=" << bw::format_double(discrepancy) << '\n';
  }
  return kOk;
}

struct MapArgs {
  std::string f, g, out;
};

int cmd_map(const MapArgs& a) {
  echo("command", "map");
  echo("f", a.f);
  echo("g", a.g);
  echo("out", a.out.empty() ? "-" : a.out);
  const bw::PsdMatrix f = bw::load_psd(a.f);
  const bw::PsdMatrix g = bw::load_psd(a.g);
  if (f.dim() != g.dim()) throw bw::DimensionMismatchError(f.dim(), g.dim());
  const bw::TransportMap t = bw::optimal_map(f, g);
  std::cout << "distance_via_map=" << bw::format_double(bw::bw_distance_via_map(f, g)) << '\n';
  write_matrix_out(a.out, "map", t.matrix.matrix());
  return kOk;
}

int cmd_logmap(const MapArgs& a) {
  echo("command", "logmap");
  echo("base", a.f);
  echo("target", a.g);
  echo("out", a.out.empty() ? "-" : a.out);
  const bw::PsdMatrix base = bw::load_psd(a.f);
  const bw::PsdMatrix target = bw::load_psd(a.g);
  if (base.dim() != target.dim()) throw bw::DimensionMismatchError(base.dim(), target.dim());
  const bw::TangentVector v = bw::log_map(base, target);
  std::cout << "tangent_norm=" << bw::format_double(bw::tangent_norm(base, v.value)) << '\n';
  write_matrix_out(a.out, "logmap", v.value.matrix());
  return kOk;
}

// --- barycentre ------------------------------------------------------------

struct BaryArgs {
  std::vector<std::string> files;
  double rtol = 1e-10;
  int max_iter = 500;
  double rank_tol = bw::kDefaultRankTol;
  std::string out;
};

int cmd_bary(const BaryArgs& a) {
  echo("command", "bary");
  echo("inputs", join(a.files));
  echo("solver.rtol", bw::format_double(a.rtol));
  echo("solver.max_iter", std::to_string(a.max_iter));
  echo("solver.rank_tol", bw::format_double(a.rank_tol));
  echo("out", a.out.empty() ? "-" : a.out);
  const auto samples = load_all(a.files);
  bw::BarycenterConfig cfg;
  cfg.rtol = a.rtol;
  cfg.max_iter = a.max_iter;
  cfg.rank_tol = a.rank_tol;
  const bw::BarycenterResult res = bw::barycenter_fixed_point(samples, cfg);
  const bool dominated = bw::check_domination(res.barycenter, samples, 1e-9);
  std::cout << "domination=" << (dominated ? 1 : 0) << '\n';
  if (a.out.empty()) {
    bw::write_barycenter_result(std::cout, res);
  } else {
    std::ofstream os(a.out);
    if (!os) throw bw::InputError("cannot open '" + a.out + "' for writing");
    os << "domination=" << (dominated ? 1 : 0) << '\n';
    bw::write_barycenter_result(os, res);
    std::cout << "converged=" << (res.converged ? 1 : 0) << '\n';
    std::cout << "iterations=" << res.iterations << '\n';
    std::cout << "residual=" << bw::format_double(res.residual) << '\n';
    std::cout << "functional_value=" << bw::format_double(res.functional_value) << '\n';
    std::cout << "uniqueness_warning=" << (res.uniqueness_warning ? 1 : 0) << '\n';
  }
  if (!res.converged) {
    std::cerr << "barycentre solver did not converge in " << res.iterations << " iterations\n";
    return kNonconverged;
  }
  return kOk;
}

struct ResidualArgs {
  std::string xi;
  std::vector<std::string> files;
};

int cmd_residual(const ResidualArgs& a) {
  echo("command", "residual");
  echo("xi", a.xi);
  echo("inputs", join(a.files));
  const bw::PsdMatrix xi = bw::load_psd(a.xi);
  const auto samples = load_all(a.files);
  if (xi.dim() != samples.front().dim()) throw bw::DimensionMismatchError(xi.dim(), samples.front().dim());
  std::cout << "residual=" << bw::format_double(bw::fixed_point_residual(xi, samples)) << '\n';
  std::cout << "functional_value=" << bw::format_double(bw::frechet_functional(xi, samples)) << '\n';
  return kOk;
}

// --- experiments -----------------------------------------------------------

struct ExperimentArgs {
  std::string kind;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::vector<std::string> overrides;
};

bw::ExperimentConfig resolve_config(const ExperimentArgs& a) {
  bw::KeyValues kv = a.config.empty() ? bw::KeyValues{} : bw::KeyValues::parse_file(a.config);
  for (const auto& item : a.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw bw::ParseError("--set expects key=value, got '" + item + "'");
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  if (a.seed) kv.set("master_seed", std::to_string(*a.seed));
  bw::ExperimentConfig cfg = bw::ExperimentConfig::from_key_values(kv);
  if (a.threads > 0) cfg.threads = a.threads;
  return cfg;
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw bw::InputError("cannot open '" + path.string() + "' for writing");
  body(os);
}

int cmd_experiment(const ExperimentArgs& a) {
  const bw::ExperimentConfig cfg = resolve_config(a);
  cfg.validate();
  g_echo_as_comment = a.out.empty();
  echo("command", a.kind);
  if (!a.config.empty()) echo("config_file", a.config);
  echo("out", a.out.empty() ? "-" : a.out);
  if (a.kind == "instability") {
    echo("instability.d", std::to_string(cfg.instability_dim));
    echo("instability.b", bw::format_double(cfg.instability_b));
  } else {
    // The full resolved config is echoed by the report itself.
    echo("master_seed", std::to_string(cfg.master_seed));
  }

  if (a.kind == "instability") {
    const bw::InstabilityReport rep = bw::run_instability(cfg.instability_dim, cfg.instability_b);
    if (a.out.empty()) {
      rep.write_csv(std::cout);
      rep.write_summary(std::cerr);
    } else {
      fs::create_directories(a.out);
      write_text(fs::path(a.out) / "instability.csv", [&](std::ostream& os) { rep.write_csv(os); });
      write_text(fs::path(a.out) / "instability_summary.txt", [&](std::ostream& os) { rep.write_summary(os); });
      rep.write_summary(std::cout);
    }
    return kOk;
  }

  if (!a.seed) throw bw::InputError("--seed is required for randomized experiments");
  bw::ExperimentReport rep;
  if (a.kind == "lln") rep = bw::run_lln(cfg);
  else if (a.kind == "clt") rep = bw::run_clt(cfg);
  else rep = bw::run_map_convergence(cfg);

  if (a.out.empty()) {
    rep.write_csv(std::cout);
    rep.write_summary(std::cerr);
  } else {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / (a.kind + ".csv"), [&](std::ostream& os) { rep.write_csv(os); });
    write_text(fs::path(a.out) / (a.kind + "_summary.txt"), [&](std::ostream& os) { rep.write_summary(os); });
    rep.write_summary(std::cout);
  }
  for (const auto& c : rep.checks) {
    if (!c.pass) std::cerr << "check failed: " << c.name << ": " << c.detail << '\n';
  }
  return rep.all_pass() ? kOk : kChecksFailed;
}

// --- selfcheck -------------------------------------------------------------

struct SelfcheckArgs {
  std::uint64_t seed = bw::SelfcheckOptions{}.seed;
  int max_dim = 10;
};

int cmd_selfcheck(const SelfcheckArgs& a) {
  bw::SelfcheckOptions opt;
  opt.seed = a.seed;
  opt.max_dim = a.max_dim;
  if (opt.max_dim < opt.min_dim) throw bw::InputError("--max-dim must be at least 2");
  echo("command", "selfcheck");
  echo("seed", std::to_string(opt.seed));
  echo("max_dim", std::to_string(opt.max_dim));
  const auto results = bw::run_selfcheck(opt);
  std::cout << "suite,cases,failures,status,worst,detail\n";
  bool ok = true;
  for (const auto& r : results) {
    std::string detail = r.detail;
    for (char& c : detail) {
      if (c == ',') c = ';';
    }
    std::cout << r.name << ',' << r.cases << ',' << r.failures << ',' << (r.pass() ? "pass" : "fail") << ','
              << bw::format_double(r.worst) << ',' << detail << '\n';
    ok = ok && r.pass();
  }
  return ok ? kOk : kSelfcheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bures-Wasserstein geometry, barycentres and Monte Carlo studies"};
  app.require_subcommand(1);

  DistArgs dist;
  auto* s_dist = app.add_subcommand("dist", "Distance between two PSD matrices");
  s_dist->add_option("F", dist.f, "bwmat file")->required();
  s_dist->add_option("G", dist.g, "bwmat file")->required();
  s_dist->add_option("--form", dist.form, "closed, procrustes, map or all")
      ->check(CLI::IsMember({"closed", "procrustes", "map", "all"}));

  MapArgs map;
  auto* s_map = app.add_subcommand("map", "Optimal transport map from F to G");
  s_map->add_option("F", map.f)->required();
  s_map->add_option("G", map.g)->required();
  s_map->add_option("--out", map.out, "write the map here instead of stdout");

  MapArgs logmap;
  auto* s_log = app.add_subcommand("logmap", "Tangent vector T - I at BASE pointing to TARGET");
  s_log->add_option("BASE", logmap.f)->required();
  s_log->add_option("TARGET", logmap.g)->required();
  s_log->add_option("--out", logmap.out);

  BaryArgs bary;
  auto* s_bary = app.add_subcommand("bary", "Empirical barycentre of the input matrices");
  s_bary->add_option("FILES", bary.files)->required();
  s_bary->add_option("--rtol", bary.rtol);
  s_bary->add_option("--max-iter", bary.max_iter);
  s_bary->add_option("--rank-tol", bary.rank_tol);
  s_bary->add_option("--out", bary.out, "result file (summary and matrix)");

  ResidualArgs residual;
  auto* s_res = app.add_subcommand("residual", "Fixed-point residual of XI against the inputs");
  s_res->add_option("XI", residual.xi)->required();
  s_res->add_option("FILES", residual.files)->required();

  std::vector<ExperimentArgs> experiments(4);
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"lln", "Consistency of the empirical barycentre"},
      {"clt", "sqrt(n) fluctuations and Gaussian projections"},
      {"maps-conv", "Convergence of estimated optimal maps"},
      {"instability", "Exact map-instability construction"}};
  std::vector<CLI::App*> s_exp;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ExperimentArgs& e = experiments[k];
    e.kind = kinds[k].first;
    auto* sub = app.add_subcommand(kinds[k].first, kinds[k].second);
    sub->add_option("--config", e.config, "key=value config file");
    sub->add_option("--seed", e.seed, "master seed (required except for instability)");
    sub->add_option("--out", e.out, "output directory for the CSV and summary");
    sub->add_option("--threads", e.threads, "worker threads (0 = all cores)");
    sub->add_option("--set", e.overrides, "override a config key (key=value), repeatable");
    s_exp.push_back(sub);
  }

  SelfcheckArgs selfcheck;
  auto* s_self = app.add_subcommand("selfcheck", "Run the property suites");
  s_self->add_option("--seed", selfcheck.seed);
  s_self->add_option("--max-dim", selfcheck.max_dim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (s_dist->parsed()) return cmd_dist(dist);
    if (s_map->parsed()) return cmd_map(map);
    if (s_log->parsed()) return cmd_logmap(logmap);
    if (s_bary->parsed()) return cmd_bary(bary);
    if (s_res->parsed()) return cmd_residual(residual);
    if (s_self->parsed()) return cmd_selfcheck(selfcheck);
    for (std::size_t k = 0; k < s_exp.size(); ++k) {
      if (s_exp[k]->parsed()) return cmd_experiment(experiments[k]);
    }
  } catch (const bw::DimensionMismatchError& e) {
    std::cerr << "dimension mismatch: " << e.what() << '\n';
    return kDimension;
  } catch (const bw::KernelMismatchError& e) {
    std::cerr << "kernel mismatch: " << e.what() << '\n';
    return kKernel;
  } catch (const bw::ExperimentError& e) {
    std::cerr << "experiment error: " << e.what() << '\n';
    return kExperiment;
  } catch (const bw::InputError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kChecksFailed;
  }
  return kParse;
}
