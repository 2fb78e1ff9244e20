#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rvlab {

/// Raised when a numerical expectation does not reach its tolerance.  The
/// library never returns a silently truncated integral.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gauss-Hermite rule for the standard normal weight: sum_i w_i f(x_i)
/// approximates E f(Z), Z ~ N(0,1).  Weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rules are computed once per size and cached; the returned reference stays
/// valid for the program lifetime.
const GaussHermiteRule& gauss_hermite_rule(std::size_t n);

struct QuadratureOptions {
  // Gauss-Hermite doubling: start at gh_min_nodes, double up to gh_max_nodes
  // until successive estimates differ by less than gh_tolerance.
  std::size_t gh_min_nodes = 64;
  std::size_t gh_max_nodes = 1024;
  double gh_tolerance = 1e-10;
  // Half-line double-exponential fallback for integrands with a kink or
  // algebraic singularity at the origin (|x|^r with non-even r, ...).
  double fallback_tolerance = 1e-10;
  // Randomized quasi-Monte Carlo for d > 1: standard error target.
  double qmc_tolerance = 1e-4;
  std::size_t qmc_shifts = 16;
  std::size_t qmc_min_points = std::size_t{1} << 10;
  std::size_t qmc_max_points = std::size_t{1} << 18;
  std::uint64_t qmc_seed = 0x5EEDu;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::string method;
  std::size_t evaluations = 0;
};

/// E f(sigma * Z) for Z ~ N(0,1).
QuadratureResult gaussian_expectation_1d(const std::function<double(double)>& f, double sigma,
                                         const QuadratureOptions& opts = {});

/// E f(L Z) for Z ~ N(0, I_k), L a d x k factor of the covariance.
QuadratureResult gaussian_expectation_nd(const std::function<double(std::span<const double>)>& f,
                                         const Eigen::MatrixXd& factor,
                                         const QuadratureOptions& opts = {});

}  // namespace rvlab
