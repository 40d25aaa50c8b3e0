// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--allow-fail N]...
//
// Exits 0 when every criterion passes, other than those named with
// --allow-fail (still reported as FAIL).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/experiments.hpp"
#include "bw/selfcheck.hpp"

using namespace bw;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string suite_detail(const SuiteResult& s) {
  return s.name + " cases=" + std::to_string(s.cases) + " failures=" + std::to_string(s.failures) + " (" +
         s.detail + ")";
}

Outcome from_suites(const std::vector<SuiteResult>& suites) {
  Outcome o{true, ""};
  for (const auto& s : suites) {
    o.pass = o.pass && s.pass();
    o.detail += (o.detail.empty() ? "" : "; ") + suite_detail(s);
  }
  return o;
}

Outcome from_checks(const ExperimentReport& r) {
  Outcome o{r.all_pass(), ""};
  for (const Check& c : r.checks) {
    o.detail += (o.detail.empty() ? "" : "; ") + c.name + "=" + (c.pass ? "pass" : "fail") + " " + c.detail;
  }
  return o;
}

SelfcheckOptions base_options() {
  SelfcheckOptions opt;
  opt.seed = 20240601;
  return opt;
}

ExperimentConfig experiment_config() {
  ExperimentConfig cfg;  // d = 5, n = 25..400, 200 replications
  cfg.master_seed = 1;
  return cfg;
}

std::string csv_of(const ExperimentReport& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--allow-fail") == 0 && i + 1 < argc) {
      allowed.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--allow-fail N]...\n");
      return 2;
    }
  }

  struct Criterion {
    int id;
    double max_seconds;  // 0 means no runtime bound
    std::function<Outcome()> run;
  };

  const std::vector<Criterion> criteria{
      {1, 10.0,
       [] {
         SelfcheckOptions opt = base_options();
         opt.max_dim = 20;
         return from_suites({suite_cross_form(opt)});
       }},
      {2, 0.0,
       [] {
         SelfcheckOptions opt = base_options();
         opt.max_dim = 20;
         return from_suites({suite_lemma1(opt)});
       }},
      {3, 0.0, [] { return from_suites({suite_monotonicity(base_options())}); }},
      {4, 0.0,
       [] {
         SelfcheckOptions opt = base_options();
         opt.min_dim = 1;
         opt.max_dim = 15;
         return from_suites({suite_sqrt_derivative(opt)});
       }},
      {5, 0.0, [] { return from_suites({suite_trace_identity(base_options())}); }},
      {6, 0.0, [] { return from_suites({suite_commuting_solver(base_options())}); }},
      {7, 30.0,
       [] {
         SeededRng rng(mix64(20240601, 7));
         std::vector<PsdMatrix> samples;
         for (int k = 0; k < 10000; ++k) samples.push_back(degenerate_chi2_example(rng));
         const BarycenterResult r = barycenter_fixed_point(samples);
         const double dist = bw_distance_procrustes(r.barycenter, degenerate_chi2_barycenter());
         const double second = r.barycenter.spectrum().min_eigenvalue();
         return Outcome{r.converged && dist <= 0.02 && second <= 1e-8,
                        "converged=" + std::to_string(r.converged) + " distance=" + fmt("%.3g", dist) +
                            " (<= 0.02) second_eigenvalue=" + fmt("%.3g", second) + " (<= 1e-8)"};
       }},
      {8, 600.0, [] { return from_checks(run_lln(experiment_config())); }},
      {9, 0.0, [] { return from_checks(run_clt(experiment_config())); }},
      {10, 0.0, [] { return from_checks(run_map_convergence(experiment_config())); }},
      {11, 5.0,
       [] {
         const InstabilityReport r = run_instability(50, 0.8);
         // The stated closed form 0.2 * 2^{-n/2} is the tail of an infinite
         // profile; with d = 50 the exact distance is
         // 0.2 * sqrt(2^{-n} - 2^{-50}).
         const bool literal = r.max_untruncated_deviation <= 1e-10;
         return Outcome{r.max_gap_error <= 1e-10 && literal,
                        "max_gap_error=" + fmt("%.3g", r.max_gap_error) +
                            " max_distance_error(finite tail)=" + fmt("%.3g", r.max_distance_error) +
                            " max_deviation_from_0.2*2^(-n/2)=" + fmt("%.3g", r.max_untruncated_deviation) +
                            " (tol 1e-10)"};
       }},
      {12, 0.0,
       [] {
         ExperimentConfig one = experiment_config();
         one.threads = 1;
         ExperimentConfig many = one;
         many.threads = 4;
         const bool clt = csv_of(run_clt(one)) == csv_of(run_clt(many));
         const bool lln = csv_of(run_lln(one)) == csv_of(run_lln(many));
         return Outcome{clt && lln, std::string("clt csv identical=") + (clt ? "yes" : "no") +
                                        " lln csv identical=" + (lln ? "yes" : "no") + " (threads 1 vs 4)"};
       }},
  };

  bool ok = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0.0 && secs > c.max_seconds) {
      o.pass = false;
      o.detail += " runtime over " + fmt("%g", c.max_seconds) + " s";
    }
    std::printf("criterion %d: %s [%.2f s] %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !allowed.count(c.id)) ok = false;
  }
  return ok ? 0 : 1;
}
