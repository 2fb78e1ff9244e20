#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rvlab/gaussian_moments.hpp"
#include "rvlab/quadrature.hpp"

using namespace rvlab;

TEST_CASE("Gauss-Hermite rule integrates normal moments") {
  for (std::size_t n : {8u, 64u, 256u}) {
    const auto& rule = gauss_hermite_rule(n);
    REQUIRE(rule.nodes.size() == n);
    double w = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rule.nodes[i];
      w += rule.weights[i];
      m2 += rule.weights[i] * x * x;
      m4 += rule.weights[i] * std::pow(x, 4);
      m6 += rule.weights[i] * std::pow(x, 6);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
  }
}

TEST_CASE("rule nodes are symmetric") {
  const auto& rule = gauss_hermite_rule(64);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[63 - i]).epsilon(1e-13));
    CHECK(rule.weights[i] == doctest::Approx(rule.weights[63 - i]).epsilon(1e-12));
  }
}

TEST_CASE("smooth integrands converge on the first rules") {
  const auto res = gaussian_expectation_1d([](double x) { return std::cos(x); }, 1.0);
  CHECK(res.value == doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
  CHECK(res.method.find("gauss-hermite") != std::string::npos);
}

TEST_CASE("kinked integrands reach 1e-8 through the fallback") {
  for (double r : {0.7, 1.0, 1.5, 2.4}) {
    for (double sigma : {0.5, 1.0, 3.0}) {
      const auto res = gaussian_expectation_1d([r](double x) { return std::pow(std::abs(x), r); }, sigma);
      CHECK(std::abs(res.value - abs_moment(r) * std::pow(sigma, r)) < 1e-8);
    }
  }
}

TEST_CASE("multivariate expectations use quasi Monte Carlo") {
  Eigen::MatrixXd factor(2, 2);
  factor << 1.0, 0.0, 0.5, std::sqrt(0.75);
  const auto res = gaussian_expectation_nd(
      [](std::span<const double> y) { return std::abs(y[0] * y[1]); }, factor);
  // E|XY| for unit variances and correlation rho.
  const double rho = 0.5;
  const double exact = 2.0 / std::numbers::pi * (std::sqrt(1 - rho * rho) + rho * std::asin(rho));
  CHECK(std::abs(res.value - exact) < 5e-4);
  CHECK(res.error <= 1e-4);
}

TEST_CASE("unreachable tolerance is reported, not truncated") {
  QuadratureOptions opts;
  opts.qmc_tolerance = 1e-12;
  opts.qmc_max_points = 1u << 11;
  Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(gaussian_expectation_nd([](std::span<const double> y) { return std::abs(y[0]); }, factor, opts),
                  QuadratureError);
}
