#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rvlab/gh_function.hpp"
#include "rvlab/quadrature.hpp"

namespace rvlab {

/// Spot volatility sigma (d x d') together with Sigma = sigma sigma'.
class SpotCov {
 public:
  static SpotCov from_sigma(const Eigen::MatrixXd& sigma);
  /// Sigma must be symmetric positive semi-definite; sigma is taken as a
  /// symmetric square root.
  static SpotCov from_covariance(const Eigen::MatrixXd& covariance);
  static SpotCov scalar(double sigma);

  std::size_t dim() const { return static_cast<std::size_t>(cov_.rows()); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// Ratio of extreme eigenvalues of Sigma (infinity when singular).
  double condition_number() const;

 private:
  SpotCov(Eigen::MatrixXd sigma, Eigen::MatrixXd cov);
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd cov_;
};

/// mu_r = E|u|^r, u ~ N(0,1), for r > -1.  Exact for even integers.
double abs_moment(double r);

/// pi^2/4 + pi - 5.
double theta_constant();

/// E f(X), X ~ N(0, Sigma), for a single scalar entry.
double expectation(const Entry& f, const SpotCov& cov, const QuadratureOptions& opts = {});

/// rho_sigma(f) = E f(X), X ~ N(0, sigma sigma').
Eigen::MatrixXd rho(const GHFunction& f, const SpotCov& cov, const QuadratureOptions& opts = {});

/// E g(X) h(X) (matrix product inside the expectation).
Eigen::MatrixXd rho_product(const GHFunction& g, const GHFunction& h, const SpotCov& cov,
                            const QuadratureOptions& opts = {});

/// v_r = Var|u|^r.
double power_variance_constant(double r);

/// mu_{2r} mu_{2s} + 2 mu_{r+s} mu_r mu_s - 3 mu_r^2 mu_s^2.
double bipower_variance_constant(double r, double s);

/// omega_I^2: asymptotic variance constant of equal-power (2/I) multipower
/// variation, by counting the overlap of lagged windows.
double multipower_variance_constant(int terms);

/// Asymptotic variance constant of multipower variation with arbitrary
/// powers p_1..p_I:  sum over lags |l| < I of Cov(prod_m |u_m|^{p_m},
/// prod_m |u_{m+l}|^{p_m}), u i.i.d. N(0,1).  Multiply by sigma^{2 sum p}.
double multipower_asymptotic_variance(std::span<const double> powers);

/// Scalar quadratic form A(sigma, g, h) for 1x1 g and h.
double clt_variance_scalar(const GHFunction& g, const GHFunction& h, const SpotCov& cov,
                           const QuadratureOptions& opts = {});

/// Four-index array A^{jk,j'k'}, j,j' < rows, k,k' < cols.
class CovarianceArray {
 public:
  CovarianceArray(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t j, std::size_t k, std::size_t jp, std::size_t kp);
  double operator()(std::size_t j, std::size_t k, std::size_t jp, std::size_t kp) const;
  /// (rows*cols) x (rows*cols) matrix indexed by (j*cols + k, j'*cols + k').
  Eigen::MatrixXd as_matrix() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

CovarianceArray clt_covariance_general(const GHFunction& g, const GHFunction& h,
                                       const SpotCov& cov, const QuadratureOptions& opts = {});

}  // namespace rvlab
