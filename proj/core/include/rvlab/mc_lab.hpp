#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rvlab/simulator.hpp"

namespace rvlab {

enum class Statistic {
  RealizedVariance,
  PowerVariation,
  Bipower,
  Multipower,
  QuarticityRV,
  QuarticityTripower,
  QuarticityQuadpower,
  Covariation,
  JointBipowerRV,
  DetRank,
};

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& s);

struct EstimatorSpec {
  Statistic statistic = Statistic::RealizedVariance;
  double r = 2.0;
  double s = 1.0;
  std::vector<double> powers;
  std::size_t component = 0;
  /// Divide estimate and target by the Gaussian constant so the target is an
  /// integrated power of sigma (e.g. BPV / mu_1^2).
  bool normalized = false;

  std::string name() const;
};

enum class ExperimentKind { Lln, Clt, Jump };
enum class ModeSelection { Oracle, Feasible, Both };

std::string to_string(ExperimentKind k);
std::string to_string(ModeSelection m);

using Range = std::pair<double, double>;

/// Pass/fail thresholds checked after an experiment; unset gates are skipped.
struct Gates {
  std::optional<Range> slope;
  std::optional<double> z_mean_abs_max;
  std::optional<Range> z_variance;
  std::optional<double> ks_max;
  std::optional<Range> coverage95;
  std::optional<Range> feasible_coverage95;
  /// Entrywise relative tolerance, empirical vs theoretical error covariance.
  std::optional<double> covariance_rel_tol;
  /// |mean estimate / mean target - 1| at the largest n.
  std::optional<double> mean_rel_tol;
  std::optional<Range> size5;
  std::optional<double> power_minus_size5_min;
  double max_excluded_fraction = 0.01;
};

struct ExperimentConfig {
  std::string label;
  ExperimentKind kind = ExperimentKind::Lln;
  ModelSpec model;
  /// Jump experiments: the alternative model.  When absent and
  /// jump_sd_root_n > 0, the null plus one N(0, (jump_sd_root_n/sqrt(n))^2)
  /// jump is used.
  std::optional<ModelSpec> alternative;
  double jump_sd_root_n = 0.0;
  EstimatorSpec estimator;
  std::vector<std::size_t> n_list;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  ModeSelection mode = ModeSelection::Oracle;
  /// Parallelism hint; results do not depend on it.
  std::size_t workers = 1;
  std::size_t fine_ratio = 30;
  double t = 1.0;
  Gates gates;

  std::size_t n_fine() const;
  void validate() const;
};

struct ZDiagnostics {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double ks = 0.0;
  double coverage90 = 0.0;
  double coverage95 = 0.0;
  double coverage99 = 0.0;
};

/// Moments, KS distance to N(0,1) and two-sided coverage of a z sample.
ZDiagnostics summarize_z(std::vector<double> z);

struct ComponentRow {
  std::string name;
  double mean_estimate = 0.0;
  double mean_target = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  std::optional<ZDiagnostics> oracle;
  std::optional<ZDiagnostics> feasible;
};

struct ReportRow {
  std::size_t n = 0;
  std::vector<ComponentRow> components;
  /// Covariance of sqrt(n)(estimate - target) across replications, and the
  /// replication average of the integrated A(sigma_u) (CLT runs).
  Eigen::MatrixXd error_covariance;
  Eigen::MatrixXd theory_covariance;
  std::size_t excluded = 0;
  // Jump experiments (ratio statistic; linear in *_linear).
  double size1 = 0.0, size5 = 0.0, size10 = 0.0;
  double power1 = 0.0, power5 = 0.0, power10 = 0.0;
  double size5_linear = 0.0, power5_linear = 0.0;
};

struct GateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  /// Least-squares slope of log RMSE on log n (LLN runs), first component.
  std::optional<double> slope;
  std::optional<double> slope_se;
  std::vector<GateResult> gates;
  bool passed = true;
  double wall_seconds = 0.0;
  std::string generated_at;
};

ExperimentReport run_lln(const ExperimentConfig& config);
ExperimentReport run_clt(const ExperimentConfig& config);
ExperimentReport run_jump_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Least-squares fit y = a + b x; returns (b, se(b)).
std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Brute-force oracles for the Gaussian constants.

enum class OracleKind { AbsMoment, PowerVariance, BipowerConstant, Omega };

struct OracleQuery {
  OracleKind kind = OracleKind::AbsMoment;
  double r = 1.0;
  double s = 1.0;
  int terms = 1;

  std::string name() const;
};

struct OracleEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Direct simulation of the defining moment / variance / lag-covariance
/// expression from i.i.d. standard normals.
OracleEstimate moment_oracle(const OracleQuery& query, std::size_t draws, std::uint64_t seed,
                             std::size_t workers = 1);

/// The matching closed form from gaussian_moments.
double closed_form(const OracleQuery& query);

}  // namespace rvlab
