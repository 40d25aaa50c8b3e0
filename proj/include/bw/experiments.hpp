#pragma once

// Seeded Monte Carlo studies of the empirical barycentre: consistency,
// sqrt(n) fluctuations, convergence of estimated optimal maps, and the
// map-instability construction.
//
// Replication r draws from one stream seeded with mix64(master_seed, r); the
// n = 25 sample set is a prefix of the n = 50 set and so on. Rows are keyed
// by (n, replication) and aggregated in key order, so reports do not depend
// on the number of worker threads.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/io.hpp"
#include "bw/models.hpp"

namespace bw {

enum class ModelKind { Deformation, Wishart, Chi2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct ExperimentConfig {
  ModelKind model = ModelKind::Deformation;
  Index dim = 5;
  std::vector<int> sample_sizes{25, 50, 100, 200, 400};
  int replications = 200;
  std::uint64_t master_seed = 0;
  BarycenterConfig solver;

  // Deformation model; DeformationSpec::standard(dim, deformation_amplitude)
  // unless an explicit spec is given.
  double deformation_amplitude = 0.6;
  std::optional<DeformationSpec> deformation;
  std::string deformation_spec_file;  // echoed instead of the amplitude when set

  // Wishart model: identity scale unless given.
  std::optional<PsdMatrix> wishart_scale;
  std::string wishart_scale_file;
  int wishart_dof = 10;

  // Unit vectors for pointwise map errors; e_1..e_d and the normalised ones
  // vector when empty.
  std::vector<Vector> test_vectors;
  // Symmetric A for <sqrt(n) H_n, A>_HS; I/sqrt(d), (E12+E21)/sqrt(2), E11
  // when empty.
  std::vector<SymMatrix> functionals;

  int instability_dim = 50;
  double instability_b = 0.8;

  // Worker threads; 0 means hardware concurrency. Not part of the echo.
  int threads = 0;

  void validate() const;
  DeformationSpec deformation_spec() const;
  PsdMatrix wishart_scale_matrix() const;
  std::vector<Vector> resolved_test_vectors() const;
  std::vector<SymMatrix> resolved_functionals() const;

  /// Flat key=value form (dotted keys). Vectors are written as
  /// semicolon-separated lists of comma-separated entries, matrices row-major.
  static ExperimentConfig from_key_values(const KeyValues& kv);
  KeyValues to_key_values() const;
};

struct ReportRow {
  int n = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | nonconverged | map_failure
  int iterations = 0;
  std::vector<double> values;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string kind;
  KeyValues config;
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  KeyValues summary;
  std::vector<Check> checks;

  bool all_pass() const;
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

struct GaussianitySummary {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double qq_corr = 0.0;
  bool degenerate = false;  // sd == 0; the shape statistics are then 0
};

/// Sample moments (sd with n-1), skewness g1, excess kurtosis g2, and the
/// correlation of the sorted values with normal quantiles at (i - 0.5)/N.
/// Throws InputError for fewer than 30 values.
GaussianitySummary gaussianity_summary(std::vector<double> values);

double median(std::vector<double> values);
/// Interquartile range with linear interpolation between order statistics.
double iqr(std::vector<double> values);

ExperimentReport run_lln(const ExperimentConfig& cfg);
ExperimentReport run_clt(const ExperimentConfig& cfg);
ExperimentReport run_map_convergence(const ExperimentConfig& cfg);

struct InstabilityRow {
  int n = 0;
  double gap = 0.0;
  double expected_gap = 0.0;
  double distance = 0.0;
  double expected_distance = 0.0;
};

struct InstabilityReport {
  Index d = 0;
  double b = 0.0;
  std::vector<InstabilityRow> rows;
  double max_gap_error = 0.0;
  double max_distance_error = 0.0;
  // Largest |distance - (1 - b) 2^{-n/2}|: the untruncated tail, which the
  // finite construction only matches while 2^{-d} is negligible.
  double max_untruncated_deviation = 0.0;

  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

constexpr double kInstabilityTol = 1e-10;

/// Builds the family with lambda_j^2 = 2^{-j} and checks, for every n < d,
/// the op-norm gap |1 - 1/b| and the distance (1 - b) sqrt(sum_{j>n} 2^{-j})
/// to kInstabilityTol. Throws ExperimentError on any miss.
InstabilityReport run_instability(Index d, double b);

}  // namespace bw
