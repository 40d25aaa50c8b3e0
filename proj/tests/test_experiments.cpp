#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bw/experiments.hpp"

using namespace bw;

namespace {

ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.dim = 3;
  cfg.sample_sizes = {10, 20, 40};
  cfg.replications = 30;
  cfg.master_seed = seed;
  cfg.threads = 1;
  return cfg;
}

std::string csv(const ExperimentReport& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

TEST_CASE("gaussianity_summary examples") {
  const GaussianitySummary c = gaussianity_summary(std::vector<double>(40, 3.0));
  CHECK(c.degenerate);
  CHECK(c.sd == 0.0);
  CHECK(c.skewness == 0.0);

  std::vector<double> pm;
  for (int i = 0; i < 50; ++i) pm.push_back(i % 2 ? 1.0 : -1.0);
  const GaussianitySummary p = gaussianity_summary(pm);
  CHECK(p.skewness == doctest::Approx(0.0));
  CHECK(p.excess_kurtosis == doctest::Approx(-2.0));

  SeededRng rng(81);
  std::vector<double> z;
  for (int i = 0; i < 100000; ++i) z.push_back(rng.normal());
  const GaussianitySummary g = gaussianity_summary(z);
  CHECK(std::abs(g.mean) <= 0.02);
  CHECK(std::abs(g.sd - 1.0) <= 0.02);
  CHECK(std::abs(g.skewness) <= 0.03);
  CHECK(std::abs(g.excess_kurtosis) <= 0.06);
  CHECK(g.qq_corr >= 0.999);

  CHECK_THROWS_AS(gaussianity_summary(std::vector<double>(29, 1.0)), InputError);
}

TEST_CASE("median and iqr") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(iqr({1, 2, 3, 4, 5}) == doctest::Approx(2.0));
  CHECK(iqr({7, 7, 7, 7}) == 0.0);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config(1);
  CHECK_NOTHROW(cfg.validate());
  cfg.replications = 10;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = small_config(1);
  cfg.sample_sizes = {20, 10};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = small_config(1);
  cfg.model = ModelKind::Chi2;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.dim = 2;
  CHECK_NOTHROW(cfg.validate());
  cfg = small_config(1);
  cfg.model = ModelKind::Wishart;
  cfg.wishart_dof = 2;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  CHECK_THROWS_AS(parse_model_kind("gamma"), ParseError);
}

TEST_CASE("config key=value round-trip") {
  ExperimentConfig cfg = small_config(17);
  cfg.deformation_amplitude = 0.3;
  cfg.threads = 3;
  const KeyValues kv = cfg.to_key_values();
  CHECK_FALSE(kv.has("threads"));
  CHECK(kv.get("master_seed") == "17");
  const ExperimentConfig back = ExperimentConfig::from_key_values(kv);
  CHECK(back.dim == 3);
  CHECK(back.sample_sizes == cfg.sample_sizes);
  CHECK(back.replications == 30);
  CHECK(back.deformation_amplitude == 0.3);
  CHECK(back.to_key_values().entries() == kv.entries());

  KeyValues unknown = kv;
  unknown.set("bogus", "1");
  CHECK_THROWS_AS(ExperimentConfig::from_key_values(unknown), ParseError);
}

TEST_CASE("zero amplitude gives exact recovery") {
  ExperimentConfig cfg = small_config(5);
  cfg.deformation_amplitude = 0.0;
  for (const ExperimentReport& r : {run_lln(cfg), run_clt(cfg), run_map_convergence(cfg)}) {
    CHECK(r.all_pass());
    for (const ReportRow& row : r.rows) {
      CHECK(row.status == "ok");
      for (double v : row.values) {
        if (std::isfinite(v) && v != 1.0) CHECK(std::abs(v) <= 1e-8);
      }
    }
  }
}

TEST_CASE("rows are keyed by (n, replication) with per-replication seeds") {
  const ExperimentConfig cfg = small_config(9);
  const ExperimentReport r = run_lln(cfg);
  REQUIRE(r.rows.size() == 3 * 30);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].n == cfg.sample_sizes[i / 30]);
    CHECK(r.rows[i].replication == static_cast<int>(i % 30));
    CHECK(r.rows[i].seed == mix64(9, i % 30));
  }
}

TEST_CASE("prefix property: adding larger sizes does not change smaller rows") {
  ExperimentConfig a = small_config(11);
  a.sample_sizes = {10, 20};
  ExperimentConfig b = small_config(11);
  const ExperimentReport ra = run_lln(a);
  const ExperimentReport rb = run_lln(b);
  for (std::size_t i = 0; i < ra.rows.size(); ++i) CHECK(ra.rows[i].values == rb.rows[i].values);
}

TEST_CASE("reports do not depend on the thread count") {
  ExperimentConfig one = small_config(13);
  ExperimentConfig four = one;
  four.threads = 4;
  CHECK(csv(run_clt(one)) == csv(run_clt(four)));
  CHECK(csv(run_map_convergence(one)) == csv(run_map_convergence(four)));
  ExperimentConfig other = small_config(14);
  CHECK(csv(run_clt(one)) != csv(run_clt(other)));
}

TEST_CASE("models without a known barycentre are rejected") {
  ExperimentConfig cfg = small_config(1);
  cfg.model = ModelKind::Wishart;
  CHECK_THROWS_AS(run_lln(cfg), InputError);
  CHECK_THROWS_AS(run_map_convergence(cfg), InputError);
}

TEST_CASE("chi-square consistency run") {
  ExperimentConfig cfg = small_config(3);
  cfg.model = ModelKind::Chi2;
  cfg.dim = 2;
  cfg.sample_sizes = {25, 100, 400};
  const ExperimentReport r = run_lln(cfg);
  CHECK(r.all_pass());
}

TEST_CASE("report output formats") {
  const ExperimentReport r = run_lln(small_config(2));
  const std::string text = csv(r);
  CHECK(text.rfind("# kind=lln\n", 0) == 0);
  CHECK(text.find("n,replication,seed,status,iterations,error,dominated\n") != std::string::npos);
  std::ostringstream s;
  r.write_summary(s);
  CHECK(s.str().find("check.domination=") != std::string::npos);
  CHECK(s.str().find("all_pass=") != std::string::npos);
}

TEST_CASE("run_instability examples") {
  const InstabilityReport r = run_instability(50, 0.8);
  REQUIRE(r.rows.size() == 49);
  for (const InstabilityRow& row : r.rows) {
    CHECK(row.gap == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(std::abs(row.distance - row.expected_distance) <= kInstabilityTol);
  }
  CHECK(r.max_gap_error <= kInstabilityTol);
  CHECK(run_instability(10, 0.5).rows.front().gap == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(run_instability(10, 0.999).rows.back().gap == doctest::Approx(1.0 / 0.999 - 1.0).epsilon(1e-8));
  CHECK_THROWS_AS(run_instability(10, 1.5), InputError);
}
