#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rvlab/gaussian_moments.hpp"
#include "rvlab/realized.hpp"

namespace rvlab {

enum class InferenceMode { Feasible, Oracle };

std::string to_string(InferenceMode m);

/// Two-sided standard normal critical value for a confidence level in (0,1).
double normal_critical_value(double level);
double normal_cdf(double x);

struct CltResult {
  double estimate = 0.0;
  std::optional<double> target;
  /// Estimated integral of A(sigma_u) du, i.e. the variance of the
  /// sqrt(n)-scaled error.
  double avar_hat = 0.0;
  std::optional<double> z;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.95;
  std::size_t n = 0;
  InferenceMode mode = InferenceMode::Feasible;
  bool degenerate = false;

  double standard_error() const;
};

/// Element-wise inference for realized covariation.
struct CltMatrixResult {
  Eigen::MatrixXd estimate;
  /// avar(j,k) is the asymptotic variance of element (j,k).
  Eigen::MatrixXd avar_hat;
  CovarianceArray avar_full{0, 0};
  Eigen::MatrixXd ci_lo;
  Eigen::MatrixXd ci_hi;
  double level = 0.95;
  std::size_t n = 0;
  bool degenerate = false;
};

struct JumpTestResult {
  double rv = 0.0;
  double bpv_scaled = 0.0;
  double iq_hat = 0.0;
  double stat_linear = 0.0;
  double stat_ratio = 0.0;
  /// One-sided (lower tail): jumps push RV above scaled bipower variation.
  double p_linear = 1.0;
  double p_ratio = 1.0;
  double p_linear_two_sided = 1.0;
  double p_ratio_two_sided = 1.0;
  std::size_t n = 0;
  bool degenerate = false;
  /// Validity of the null distribution needs (H1)+(H2), which cannot be
  /// checked from data.
  std::string note = "valid under (H1)+(H2)";
};

CltResult ci_power_variation(const ReturnSeries& ret, std::size_t j, double r, double t,
                             double level);

/// The integrated power sigma^{2(r+s)} is estimated by a four-term multipower
/// variation with equal powers (r+s)/2, which stays consistent under
/// finite-activity jumps.
CltResult ci_bipower(const ReturnSeries& ret, std::size_t j, double r, double s, double t,
                     double level);

/// d = 1 delegates to ci_power_variation with r = 2.  Otherwise the
/// integrated quadratic form Sigma^{jj'}Sigma^{kk'} + Sigma^{jk'}Sigma^{kj'}
/// is estimated by n sum_i [P_i^{jj'} P_{i+1}^{kk'} + P_i^{jk'} P_{i+1}^{kj'}]
/// with P_i = D_i D_i' the per-interval outer products.
CltMatrixResult ci_covariation(const ReturnSeries& ret, double t, double level);

JumpTestResult jump_test(const ReturnSeries& ret, std::size_t j, double t);

/// sqrt(n) (estimate - target) / sqrt(avar_true).
double oracle_standardize(double estimate, double target, double avar_true, std::size_t n);

}  // namespace rvlab
