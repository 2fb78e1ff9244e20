#include "rvlab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/random/sobol.hpp>

#include "rvlab/rng.hpp"

namespace rvlab {
namespace {

// Starting points are the eigenvalues of the Jacobi matrix; each is then
// polished by Newton iteration on the orthonormal Hermite recursion
// (physicists' weight e^{-x^2}), with the running values rescaled so that
// large n does not overflow.  Converted to the N(0,1) weight at the end.
GaussHermiteRule build_rule(std::size_t n) {
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const std::size_t half = (n + 1) / 2;
  std::vector<double> x(n), w(n);
  const double nd = static_cast<double>(n);
  Eigen::VectorXd guesses = Eigen::VectorXd::Zero(1);
  if (n > 1) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 1; k < n; ++k) sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(0.5 * static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    guesses = solver.eigenvalues();
  }
  for (std::size_t i = 0; i < half; ++i) {
    double z = guesses(static_cast<Eigen::Index>(n - 1 - i));
    double pp = 0.0, log_scale = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      double p1 = pim4, p2 = 0.0;
      log_scale = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
        if (std::abs(p1) > 1e150) {
          p1 *= 1e-150;
          p2 *= 1e-150;
          log_scale += 150.0 * std::numbers::ln10;
        }
      }
      pp = std::sqrt(2.0 * nd) * p2;
      const double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    const double log_w = std::log(2.0) - 2.0 * log_scale - 2.0 * std::log(std::abs(pp));
    w[i] = w[n - 1 - i] = std::exp(log_w);
  }
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] * inv_sqrt_pi;
  }
  return rule;
}

double apply_rule(const GaussHermiteRule& rule, const std::function<double(double)>& f,
                  double sigma) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    if (rule.weights[i] == 0.0) continue;
    sum += rule.weights[i] * f(sigma * rule.nodes[i]);
  }
  return sum;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite_rule: n must be >= 1");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(n));
  return *slot;
}

QuadratureResult gaussian_expectation_1d(const std::function<double(double)>& f, double sigma,
                                         const QuadratureOptions& opts) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_expectation_1d: sigma must be finite and >= 0");
  }
  QuadratureResult out;
  if (sigma == 0.0) {
    out.value = f(0.0);
    out.method = "degenerate";
    out.evaluations = 1;
    return out;
  }

  std::size_t n = opts.gh_min_nodes;
  double prev = apply_rule(gauss_hermite_rule(n), f, sigma);
  out.evaluations = n;
  while (n < opts.gh_max_nodes) {
    n *= 2;
    const double cur = apply_rule(gauss_hermite_rule(n), f, sigma);
    out.evaluations += n;
    if (std::isfinite(cur) && std::abs(cur - prev) < opts.gh_tolerance) {
      out.value = cur;
      out.error = std::abs(cur - prev);
      out.method = "gauss-hermite-" + std::to_string(n);
      return out;
    }
    prev = cur;
  }

  // Split at the origin: each half-line integrand is smooth away from 0 and
  // the double-exponential map absorbs algebraic endpoint behaviour.
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto half = [&](double sign) {
    return [&, sign](double x) {
      const double density = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      if (density == 0.0) return 0.0;
      return f(sign * sigma * x) * density;
    };
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double err_pos = 0.0, err_neg = 0.0, l1_pos = 0.0, l1_neg = 0.0;
  std::size_t levels_pos = 0, levels_neg = 0;
  const double rel_tol = 1e-13;
  const double pos = integrator.integrate(half(1.0), 0.0, std::numeric_limits<double>::infinity(),
                                          rel_tol, &err_pos, &l1_pos, &levels_pos);
  const double neg = integrator.integrate(half(-1.0), 0.0, std::numeric_limits<double>::infinity(),
                                          rel_tol, &err_neg, &l1_neg, &levels_neg);
  out.value = pos + neg;
  out.error = err_pos * l1_pos + err_neg * l1_neg;
  out.method = "exp-sinh";
  if (!std::isfinite(out.value) || out.error > opts.fallback_tolerance) {
    std::ostringstream msg;
    msg << "gaussian_expectation_1d: no convergence (Gauss-Hermite up to " << opts.gh_max_nodes
        << " nodes, exp-sinh error estimate " << out.error << " > " << opts.fallback_tolerance
        << ")";
    throw QuadratureError(msg.str());
  }
  return out;
}

QuadratureResult gaussian_expectation_nd(const std::function<double(std::span<const double>)>& f,
                                         const Eigen::MatrixXd& factor,
                                         const QuadratureOptions& opts) {
  const auto d = static_cast<std::size_t>(factor.rows());
  const auto k = static_cast<std::size_t>(factor.cols());
  if (d == 0 || k == 0) throw std::invalid_argument("gaussian_expectation_nd: empty factor");
  if (opts.qmc_shifts < 2) throw std::invalid_argument("gaussian_expectation_nd: need >= 2 shifts");

  const boost::math::normal_distribution<double> normal;
  const CounterRng rng(opts.qmc_seed, 0);
  std::vector<double> shifts(opts.qmc_shifts * k);
  for (std::size_t s = 0; s < opts.qmc_shifts; ++s) {
    for (std::size_t c = 0; c < k; ++c) {
      shifts[s * k + c] = rng.uniform(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(c));
    }
  }

  std::vector<double> sums(opts.qmc_shifts, 0.0);
  std::vector<boost::random::sobol> engines;
  engines.reserve(opts.qmc_shifts);
  for (std::size_t s = 0; s < opts.qmc_shifts; ++s) engines.emplace_back(static_cast<unsigned>(k));

  Eigen::VectorXd z(k), x(d);
  std::vector<double> raw(k);
  std::size_t points = 0;
  std::size_t target = opts.qmc_min_points;
  QuadratureResult out;
  out.method = "rqmc-sobol";
  constexpr double kTwoPow64 = 18446744073709551616.0;
  while (true) {
    for (std::size_t s = 0; s < opts.qmc_shifts; ++s) {
      auto& engine = engines[s];
      for (std::size_t p = points; p < target; ++p) {
        for (std::size_t c = 0; c < k; ++c) raw[c] = static_cast<double>(engine()) / kTwoPow64;
        for (std::size_t c = 0; c < k; ++c) {
          double u = raw[c] + shifts[s * k + c];
          u -= std::floor(u);
          u = std::clamp(u, 1e-300, 1.0 - 1e-16);
          z(static_cast<Eigen::Index>(c)) = boost::math::quantile(normal, u);
        }
        x.noalias() = factor * z;
        sums[s] += f(std::span<const double>(x.data(), d));
      }
    }
    points = target;
    out.evaluations = points * opts.qmc_shifts;

    double mean = 0.0;
    for (double s : sums) mean += s / static_cast<double>(points);
    mean /= static_cast<double>(opts.qmc_shifts);
    double var = 0.0;
    for (double s : sums) {
      const double e = s / static_cast<double>(points) - mean;
      var += e * e;
    }
    var /= static_cast<double>(opts.qmc_shifts - 1);
    out.value = mean;
    out.error = std::sqrt(var / static_cast<double>(opts.qmc_shifts));
    if (out.error <= opts.qmc_tolerance) return out;
    if (points >= opts.qmc_max_points) break;
    target = std::min(points * 2, opts.qmc_max_points);
  }
  std::ostringstream msg;
  msg << "gaussian_expectation_nd: standard error " << out.error << " above tolerance "
      << opts.qmc_tolerance << " after " << out.evaluations << " evaluations";
  throw QuadratureError(msg.str());
}

}  // namespace rvlab
