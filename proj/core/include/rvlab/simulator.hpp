#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rvlab/gaussian_moments.hpp"
#include "rvlab/realized.hpp"

namespace rvlab {

/// dY = a dt + sigma dW.
struct ConstantVol {
  double drift = 0.0;
  double sigma = 1.0;
};

/// Square-root variance with leverage:
///   dv = kappa (theta - v) dt + xi sqrt(v) dB,  corr(dW, dB) = rho.
struct MeanRevertingVolLeverage {
  double kappa = 5.0;
  double theta = 1.0;
  double xi = 1.0;
  double rho = -0.7;
  double v0 = 1.0;
  double drift = 0.0;
};

/// Variance is an OU process driven by a compound-Poisson subordinator with
/// exponential jump sizes:  dv = -decay v dt + dZ.
struct OUJumpVol {
  double lambda = 5.0;
  double jump_mean = 0.2;
  double decay = 1.0;
  double v0 = 1.0;
  double drift = 0.0;
};

/// Additive price jumps.  These break the continuous Brownian semimartingale
/// assumption and exist to generate jump-test alternatives.
struct PriceJumpOverlay {
  double lambda = 1.0;
  double jump_sd = 0.1;
  /// Exactly one jump at a uniformly drawn step instead of a Poisson count.
  bool single = false;
};

using VolModel = std::variant<ConstantVol, MeanRevertingVolLeverage, OUJumpVol>;

struct ModelSpec {
  VolModel vol = ConstantVol{};
  std::optional<PriceJumpOverlay> price_jumps;
  std::size_t dim = 1;
  /// Correlation of the price shocks across components (dim x dim); empty
  /// means identity.
  Eigen::MatrixXd correlation;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  Eigen::MatrixXd correlation_or_identity() const;
  std::string name() const;
};

struct SimPath {
  std::size_t n_fine = 0;
  std::size_t dim = 1;
  /// Row-major (n_fine + 1) x dim, y[k] at time k / n_fine.
  std::vector<double> y;
  /// Spot variance per component on the same grid.  Increment k uses
  /// spot_var at k - 1.
  std::vector<double> spot_var;
  Eigen::MatrixXd correlation;
  std::vector<std::size_t> jump_steps;
  std::vector<double> jump_sizes;
  std::size_t vol_jump_count = 0;
  bool has_price_jumps = false;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ModelSpec model;

  double level(std::size_t k, std::size_t component) const { return y[k * dim + component]; }
  double variance(std::size_t k, std::size_t component) const {
    return spot_var[k * dim + component];
  }
};

/// Euler scheme on the grid {k / n_fine}; a pure function of
/// (model, n_fine, seed, stream).
SimPath simulate(const ModelSpec& model, std::size_t n_fine, std::uint64_t seed,
                 std::uint64_t stream = 0);

/// Left-point Riemann sum of spot_var^{p/2} up to floor(t n_fine).
double integrated_power(const SimPath& path, double p, double t, std::size_t component = 0);

/// Riemann sum of det(Sigma_u), Sigma = D^{1/2} R D^{1/2}.
double integrated_det(const SimPath& path, double t);

/// Riemann sum of Sigma^{jj'} Sigma^{kk'} + Sigma^{jk'} Sigma^{kj'}.
CovarianceArray integrated_covariation_avar(const SimPath& path, double t);

/// Integrated spot covariance matrix.
Eigen::MatrixXd integrated_covariance(const SimPath& path, double t);

/// Coarse returns Y_{i/n} - Y_{(i-1)/n}; n must divide n_fine.
ReturnSeries subsample(const SimPath& path, std::size_t n);

/// The simulated path as observations on {k / n_fine}.
LogPricePath as_log_price_path(const SimPath& path);

}  // namespace rvlab
