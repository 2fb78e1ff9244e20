#include "rvlab/simulator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rvlab/rng.hpp"

namespace rvlab {
namespace {

// Lane purposes for CounterRng.
constexpr std::uint32_t kShockLane = 0;
constexpr std::uint32_t kVolJumpCountLane = 1;
constexpr std::uint32_t kVolJumpSizeLane = 2;
constexpr std::uint32_t kPriceJumpCountLane = 3;
constexpr std::uint32_t kPriceJumpSizeLane = 4;
constexpr std::uint32_t kPriceJumpTimeLane = 5;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("ModelSpec: " + what);
}

// Inverse-CDF Poisson draw; small means only (per-step intensities).
std::size_t poisson_from_uniform(double mean, double u) {
  double p = std::exp(-mean);
  double cdf = p;
  std::size_t k = 0;
  while (u > cdf && k < 10000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0) break;
  }
  return k;
}

}  // namespace

void ModelSpec::validate() const {
  require(dim >= 1 && dim <= 255, "dim must be in [1, 255]");
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        require(std::isfinite(m.drift), "drift must be finite");
        if constexpr (std::is_same_v<T, ConstantVol>) {
          require(m.sigma > 0.0 && std::isfinite(m.sigma), "sigma must be > 0");
        } else if constexpr (std::is_same_v<T, MeanRevertingVolLeverage>) {
          require(m.kappa > 0.0, "kappa must be > 0");
          require(m.theta > 0.0, "theta must be > 0");
          require(m.xi >= 0.0, "xi must be >= 0");
          require(m.v0 > 0.0, "v0 must be > 0");
          require(std::abs(m.rho) <= 1.0, "|rho| must be <= 1");
        } else {
          require(m.lambda > 0.0, "lambda must be > 0");
          require(m.jump_mean > 0.0, "jump_mean must be > 0");
          require(m.decay > 0.0, "decay must be > 0");
          require(m.v0 > 0.0, "v0 must be > 0");
        }
      },
      vol);
  if (price_jumps) {
    require(price_jumps->jump_sd > 0.0, "price jump sd must be > 0");
    require(price_jumps->single || price_jumps->lambda > 0.0, "price jump lambda must be > 0");
  }
  if (correlation.size() != 0) {
    const auto d = static_cast<Eigen::Index>(dim);
    require(correlation.rows() == d && correlation.cols() == d, "correlation must be dim x dim");
    for (Eigen::Index i = 0; i < d; ++i) {
      require(std::abs(correlation(i, i) - 1.0) < 1e-12, "correlation must have unit diagonal");
      for (Eigen::Index j = 0; j < d; ++j) {
        require(std::abs(correlation(i, j) - correlation(j, i)) < 1e-12,
                "correlation must be symmetric");
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() >= -1e-12, "correlation must be positive semi-definite");
  }
}

Eigen::MatrixXd ModelSpec::correlation_or_identity() const {
  if (correlation.size() == 0) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  }
  return correlation;
}

std::string ModelSpec::name() const {
  std::string base = std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantVol>) return "constant";
        else if constexpr (std::is_same_v<T, MeanRevertingVolLeverage>) return "heston";
        else return "ou-jump";
      },
      vol);
  if (price_jumps) base += "+price-jumps";
  return base;
}

SimPath simulate(const ModelSpec& model, std::size_t n_fine, std::uint64_t seed,
                 std::uint64_t stream) {
  model.validate();
  if (n_fine < 100) throw std::invalid_argument("simulate: n_fine must be >= 100");
  if (n_fine >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("simulate: n_fine too large");
  }
  const std::size_t d = model.dim;
  const CounterRng rng(seed, stream);
  const double dt = 1.0 / static_cast<double>(n_fine);
  const double sqrt_dt = std::sqrt(dt);

  SimPath path;
  path.n_fine = n_fine;
  path.dim = d;
  path.seed = seed;
  path.stream = stream;
  path.model = model;
  path.correlation = model.correlation_or_identity();
  path.y.assign((n_fine + 1) * d, 0.0);
  path.spot_var.assign((n_fine + 1) * d, 0.0);

  Eigen::MatrixXd chol;
  const bool correlated = d > 1 && !path.correlation.isIdentity(0.0);
  if (correlated) {
    // LDLT tolerates a semi-definite correlation matrix.
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(path.correlation);
    const Eigen::VectorXd diag = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    chol = ldlt.transpositionsP().transpose() *
           Eigen::MatrixXd(ldlt.matrixL()) * diag.asDiagonal();
  }

  double drift = 0.0;
  double leverage = 0.0;
  std::vector<double> state(d);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        drift = m.drift;
        if constexpr (std::is_same_v<T, ConstantVol>) {
          std::fill(state.begin(), state.end(), m.sigma * m.sigma);
        } else {
          std::fill(state.begin(), state.end(), m.v0);
        }
        if constexpr (std::is_same_v<T, MeanRevertingVolLeverage>) leverage = m.rho;
      },
      model.vol);
  for (std::size_t c = 0; c < d; ++c) path.spot_var[c] = state[c];

  std::vector<std::size_t> single_jump_step(d, 0);
  const auto& jumps = model.price_jumps;
  if (jumps && jumps->single) {
    for (std::size_t c = 0; c < d; ++c) {
      const double u = rng.uniform(0, make_lane(kPriceJumpTimeLane, static_cast<std::uint32_t>(c)));
      single_jump_step[c] = 1 + std::min(n_fine - 1, static_cast<std::size_t>(u * static_cast<double>(n_fine)));
    }
  }

  const double lev_perp = std::sqrt(std::max(0.0, 1.0 - leverage * leverage));
  Eigen::VectorXd w(static_cast<Eigen::Index>(d)), eps(static_cast<Eigen::Index>(d));

  for (std::size_t k = 1; k <= n_fine; ++k) {
    const auto step = static_cast<std::uint32_t>(k);
    for (std::size_t c = 0; c < d; ++c) {
      const auto comp = static_cast<std::uint32_t>(c);
      const auto z = rng.normal_pair(step, make_lane(kShockLane, comp));
      w(static_cast<Eigen::Index>(c)) = leverage * z[1] + lev_perp * z[0];
      std::visit(
          [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MeanRevertingVolLeverage>) {
              // Full truncation: the signed state evolves with its positive
              // part in drift and diffusion.
              const double vp = std::max(state[c], 0.0);
              state[c] += m.kappa * (m.theta - vp) * dt + m.xi * std::sqrt(vp) * sqrt_dt * z[1];
            } else if constexpr (std::is_same_v<T, OUJumpVol>) {
              state[c] *= std::exp(-m.decay * dt);
              const double u = rng.uniform(step, make_lane(kVolJumpCountLane, comp));
              const std::size_t count = poisson_from_uniform(m.lambda * dt, u);
              for (std::size_t q = 0; q < count; ++q) {
                const double v = rng.uniform(
                    step, make_lane(kVolJumpSizeLane, comp, static_cast<std::uint32_t>(q)));
                state[c] += -m.jump_mean * std::log(v);
              }
              path.vol_jump_count += count;
            }
          },
          model.vol);
      path.spot_var[k * d + c] = std::max(state[c], 0.0);
    }

    if (correlated) {
      eps.noalias() = chol * w;
    } else {
      eps = w;
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double var_prev = path.spot_var[(k - 1) * d + c];
      double inc = drift * dt + std::sqrt(var_prev) * sqrt_dt * eps(static_cast<Eigen::Index>(c));
      if (jumps) {
        const auto comp = static_cast<std::uint32_t>(c);
        std::size_t count = 0;
        if (jumps->single) {
          count = (k == single_jump_step[c]) ? 1 : 0;
        } else {
          count = poisson_from_uniform(jumps->lambda * dt,
                                       rng.uniform(step, make_lane(kPriceJumpCountLane, comp)));
        }
        for (std::size_t q = 0; q < count; q += 2) {
          const auto zj = rng.normal_pair(
              step, make_lane(kPriceJumpSizeLane, comp, static_cast<std::uint32_t>(q / 2)));
          for (std::size_t e = 0; e < 2 && q + e < count; ++e) {
            const double size = jumps->jump_sd * zj[e];
            inc += size;
            path.jump_steps.push_back(k);
            path.jump_sizes.push_back(size);
          }
        }
      }
      path.y[k * d + c] = path.y[(k - 1) * d + c] + inc;
    }
  }
  path.has_price_jumps = !path.jump_steps.empty();
  return path;
}

double integrated_power(const SimPath& path, double p, double t, std::size_t component) {
  if (!(p > 0.0)) throw std::invalid_argument("integrated_power: p must be > 0");
  if (component >= path.dim) throw std::invalid_argument("integrated_power: bad component");
  const std::size_t upper = grid_index(path.n_fine, t);
  CompensatedSum sum;
  for (std::size_t k = 0; k < upper; ++k) {
    const double v = path.variance(k, component);
    double x;
    if (p == 2.0) x = v;
    else if (p == 1.0) x = std::sqrt(v);
    else if (p == 4.0) x = v * v;
    else if (p == 8.0) x = (v * v) * (v * v);
    else x = std::pow(v, 0.5 * p);
    sum.add(x);
  }
  return sum.value() / static_cast<double>(path.n_fine);
}

namespace {

Eigen::MatrixXd spot_covariance(const SimPath& path, std::size_t k) {
  const auto d = static_cast<Eigen::Index>(path.dim);
  Eigen::VectorXd sd(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    sd(c) = std::sqrt(path.variance(k, static_cast<std::size_t>(c)));
  }
  return sd.asDiagonal() * path.correlation * sd.asDiagonal();
}

}  // namespace

double integrated_det(const SimPath& path, double t) {
  const std::size_t upper = grid_index(path.n_fine, t);
  CompensatedSum sum;
  for (std::size_t k = 0; k < upper; ++k) sum.add(spot_covariance(path, k).determinant());
  return sum.value() / static_cast<double>(path.n_fine);
}

Eigen::MatrixXd integrated_covariance(const SimPath& path, double t) {
  const std::size_t upper = grid_index(path.n_fine, t);
  const auto d = static_cast<Eigen::Index>(path.dim);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < upper; ++k) acc += spot_covariance(path, k);
  return acc / static_cast<double>(path.n_fine);
}

CovarianceArray integrated_covariation_avar(const SimPath& path, double t) {
  const std::size_t upper = grid_index(path.n_fine, t);
  const std::size_t d = path.dim;
  CovarianceArray out(d, d);
  const double inv = 1.0 / static_cast<double>(path.n_fine);
  for (std::size_t k = 0; k < upper; ++k) {
    const Eigen::MatrixXd s = spot_covariance(path, k);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t q = 0; q < d; ++q)
        for (std::size_t jp = 0; jp < d; ++jp)
          for (std::size_t qp = 0; qp < d; ++qp) {
            const auto J = static_cast<Eigen::Index>(j), Q = static_cast<Eigen::Index>(q);
            const auto JP = static_cast<Eigen::Index>(jp), QP = static_cast<Eigen::Index>(qp);
            out(j, q, jp, qp) += inv * (s(J, JP) * s(Q, QP) + s(J, QP) * s(Q, JP));
          }
  }
  return out;
}

ReturnSeries subsample(const SimPath& path, std::size_t n) {
  if (n == 0 || path.n_fine % n != 0) {
    throw std::invalid_argument("subsample: n = " + std::to_string(n) + " does not divide n_fine = " +
                                std::to_string(path.n_fine));
  }
  const std::size_t ratio = path.n_fine / n;
  const std::size_t d = path.dim;
  std::vector<double> deltas(n * d);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      deltas[(i - 1) * d + c] = path.level(i * ratio, c) - path.level((i - 1) * ratio, c);
    }
  }
  return ReturnSeries(n, d, std::move(deltas));
}

LogPricePath as_log_price_path(const SimPath& path) {
  std::vector<double> times(path.n_fine + 1);
  for (std::size_t k = 0; k <= path.n_fine; ++k) {
    times[k] = static_cast<double>(k) / static_cast<double>(path.n_fine);
  }
  return LogPricePath(std::move(times), path.y, path.dim);
}

}  // namespace rvlab
