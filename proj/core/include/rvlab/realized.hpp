#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rvlab/gh_function.hpp"

namespace rvlab {

/// d-dimensional log-price observations on [0, 1].
class LogPricePath {
 public:
  /// `values` is row-major, times.size() x dim.
  LogPricePath(std::vector<double> times, std::vector<double> values, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t obs, std::size_t component) const { return values_[obs * dim_ + component]; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t dim_;
};

/// n equispaced returns Delta_i Y = Y_{i/n} - Y_{(i-1)/n}, i = 1..n.
class ReturnSeries {
 public:
  /// `deltas` is row-major, n x dim.
  ReturnSeries(std::size_t n, std::size_t dim, std::vector<double> deltas);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  /// Return i (0-based, i.e. Delta_{i+1}) of component j.
  double operator()(std::size_t i, std::size_t j) const { return deltas_[i * dim_ + j]; }
  std::span<const double> row(std::size_t i) const { return {deltas_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return deltas_; }
  std::vector<double> component(std::size_t j) const;

  /// Set when the source path had fewer observations than intervals.
  bool sparse() const { return sparse_; }
  void set_sparse(bool s) { sparse_ = s; }

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> deltas_;
  bool sparse_ = false;
};

/// A statistic evaluated along the grid {k/n}.
struct RealizedProcess {
  std::size_t n = 0;
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> values;
  double scaling_exponent = 0.0;
};

/// floor(n t), tolerant of t values that are meant to sit on the grid.
std::size_t grid_index(std::size_t n, double t);

/// Previous-tick sampling onto {i/n}, then differencing.
ReturnSeries returns_from_path(const LogPricePath& path, std::size_t n);

/// (1/n) sum_i g(sqrt(n) D_i) h(sqrt(n) D_{i+1}), i up to min(floor(nt), n-1).
/// A constant h needs no look-ahead, so the sum then runs to floor(nt).
Eigen::MatrixXd generalized_bipower(const ReturnSeries& ret, const GHFunction& g,
                                    const GHFunction& h, double t);

/// Same statistic on every grid point k/n, k = 1..n.
RealizedProcess generalized_bipower_process(const ReturnSeries& ret, const GHFunction& g,
                                            const GHFunction& h);

double realized_variance(const ReturnSeries& ret, std::size_t j, double t);
Eigen::MatrixXd realized_covariation(const ReturnSeries& ret, double t);

/// n^{-1+r/2} sum |D_i^j|^r.
double realized_power_variation(const ReturnSeries& ret, std::size_t j, double r, double t);

/// n^{-1+(r+s)/2} sum |D_i^j|^r |D_{i+1}^j|^s.
double realized_bipower(const ReturnSeries& ret, std::size_t j, double r, double s, double t);

/// n^{-1+sum(p)/2} sum_i prod_m |D_{i+m}^j|^{p_m}, forward windows of full
/// length, i up to min(floor(nt), n-I+1).
double realized_multipower(const ReturnSeries& ret, std::size_t j, std::span<const double> powers,
                           double t);

/// Estimators of int_0^t sigma^4.
double quarticity_rv(const ReturnSeries& ret, std::size_t j, double t);
double quarticity_tripower(const ReturnSeries& ret, std::size_t j, double t);
double quarticity_quadpower(const ReturnSeries& ret, std::size_t j, double t);

/// (n^{d-1}/d!) sum_i det(zeta_i), zeta_i = sum_{m<d} D_{i+m} D_{i+m}'.
double det_rank_statistic(const ReturnSeries& ret, double t);

/// Compensated (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rvlab
