#include "doctest.h"

#include <cmath>
#include <numeric>

#include "rvlab/simulator.hpp"

using namespace rvlab;

TEST_CASE("constant volatility increments") {
  ModelSpec m;
  const std::size_t n = 100000;
  const SimPath p = simulate(m, n, 11);
  REQUIRE(p.y.size() == n + 1);
  double s2 = 0.0, s4 = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = p.level(k, 0) - p.level(k - 1, 0);
    s2 += d * d;
    s4 += d * d * d * d;
  }
  const double mean = s2 / n;
  const double se = std::sqrt((s4 / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0 / n) < 4.0 * se);
  CHECK(p.variance(0, 0) == 1.0);
  CHECK(p.variance(n, 0) == 1.0);
  CHECK_FALSE(p.has_price_jumps);
}

TEST_CASE("square-root variance without vol of vol follows its ODE") {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{4.0, 1.5, 0.0, -0.5, 0.5, 0.0};
  const std::size_t n = 10000;
  const SimPath p = simulate(m, n, 3);
  for (std::size_t k : {0u, 1000u, 5000u, 10000u}) {
    const double t = static_cast<double>(k) / n;
    const double ode = 0.5 * std::exp(-4.0 * t) + 1.5 * (1.0 - std::exp(-4.0 * t));
    CHECK(p.variance(k, 0) == doctest::Approx(ode).epsilon(1e-3));
  }
}

TEST_CASE("same seed, same path") {
  ModelSpec m;
  m.vol = OUJumpVol{};
  m.price_jumps = PriceJumpOverlay{};
  const SimPath a = simulate(m, 2000, 17, 4);
  const SimPath b = simulate(m, 2000, 17, 4);
  const SimPath c = simulate(m, 2000, 17, 5);
  CHECK(a.y == b.y);
  CHECK(a.spot_var == b.spot_var);
  CHECK(a.jump_steps == b.jump_steps);
  CHECK(a.y != c.y);
  CHECK(a.has_price_jumps);
}

TEST_CASE("integrated power") {
  ModelSpec m;
  m.vol = ConstantVol{0.0, 1.0};
  const SimPath p = simulate(m, 1000, 1);
  CHECK(integrated_power(p, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(integrated_power(p, 4.0, 0.4) == doctest::Approx(0.4).epsilon(1e-14));
  m.vol = ConstantVol{0.0, 2.0};
  CHECK(integrated_power(simulate(m, 1000, 1), 3.0, 1.0) == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("integrated variance is the quadratic variation limit") {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{};
  const std::size_t n = 100000;
  const SimPath p = simulate(m, n, 21);
  const ReturnSeries fine = subsample(p, n);
  CHECK(realized_variance(fine, 0, 1.0) == doctest::Approx(integrated_power(p, 2.0, 1.0)).epsilon(0.02));
}

TEST_CASE("subsampling") {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{};
  const SimPath p = simulate(m, 3000, 2);
  const ReturnSeries full = subsample(p, 3000);
  for (std::size_t k = 0; k < 3000; ++k) CHECK(full(k, 0) == p.level(k + 1, 0) - p.level(k, 0));
  const ReturnSeries coarse = subsample(p, 100);
  double total = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    double block = 0.0;
    for (std::size_t k = 30 * i; k < 30 * (i + 1); ++k) block += full(k, 0);
    CHECK(coarse(i, 0) == doctest::Approx(block).epsilon(1e-12));
    total += coarse(i, 0);
  }
  CHECK(total == doctest::Approx(p.level(3000, 0) - p.level(0, 0)).epsilon(1e-12));
  CHECK_THROWS_AS(subsample(p, 7), std::invalid_argument);
}

TEST_CASE("invalid models are rejected") {
  ModelSpec m;
  CHECK_THROWS(simulate(m, 50, 1));
  m.vol = ConstantVol{0.0, -1.0};
  CHECK_THROWS(simulate(m, 1000, 1));
  m.vol = MeanRevertingVolLeverage{5.0, 1.0, 1.0, -1.5, 1.0, 0.0};
  CHECK_THROWS(simulate(m, 1000, 1));
  m.vol = OUJumpVol{5.0, 0.2, 1.0, 0.0, 0.0};
  CHECK_THROWS(simulate(m, 1000, 1));
  ModelSpec c;
  c.dim = 2;
  c.correlation = Eigen::MatrixXd::Identity(2, 2);
  c.correlation(0, 1) = c.correlation(1, 0) = 1.5;
  CHECK_THROWS(simulate(c, 1000, 1));
}

TEST_CASE("mean reversion towards theta") {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{5.0, 1.0, 1.0, -0.7, 0.5, 0.0};
  double sum = 0.0;
  const int reps = 400;
  for (int k = 0; k < reps; ++k) sum += simulate(m, 1000, 5, k).variance(1000, 0);
  CHECK(sum / reps == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("variance jump counts are Poisson") {
  ModelSpec m;
  m.vol = OUJumpVol{3.0, 0.2, 1.0, 1.0, 0.0};
  double sum = 0.0;
  const int reps = 2000;
  for (int k = 0; k < reps; ++k) sum += static_cast<double>(simulate(m, 200, 6, k).vol_jump_count);
  CHECK(std::abs(sum / reps - 3.0) < 4.0 * std::sqrt(3.0 / reps));
}

TEST_CASE("variance paths stay positive") {
  ModelSpec m;
  m.vol = OUJumpVol{};
  const SimPath p = simulate(m, 5000, 8);
  for (double v : p.spot_var) CHECK(v > 0.0);
}

TEST_CASE("no leverage means symmetric returns") {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{5.0, 1.0, 1.0, 0.0, 1.0, 0.0};
  const int reps = 1000;
  std::vector<double> x(reps);
  for (int k = 0; k < reps; ++k) {
    const ReturnSeries r = subsample(simulate(m, 1000, 12, k), 50);
    double s = 0.0;
    for (std::size_t i = 0; i < 50; ++i) s += r(i, 0) * r(i, 0) * r(i, 0);
    x[k] = s;
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / reps;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(var / (reps - 1) / reps));
}

TEST_CASE("fine grid resolution barely moves the targets") {
  for (int model = 0; model < 2; ++model) {
    ModelSpec m;
    if (model == 0) m.vol = MeanRevertingVolLeverage{};
    else m.vol = OUJumpVol{};
    const std::size_t n = 6000;
    for (int k = 0; k < 20; ++k) {
      const SimPath p = simulate(m, n, 13, k);
      const double fine = integrated_power(p, 2.0, 1.0);
      double coarse = 0.0;
      for (std::size_t i = 0; i < n; i += 2) coarse += 2.0 * p.variance(i, 0) / n;
      CHECK(std::abs(fine - coarse) / fine < 0.01);
    }
  }
}

TEST_CASE("correlated components") {
  ModelSpec m;
  m.dim = 2;
  m.correlation = Eigen::MatrixXd::Identity(2, 2);
  m.correlation(0, 1) = m.correlation(1, 0) = 0.5;
  const SimPath p = simulate(m, 50000, 14);
  const ReturnSeries r = subsample(p, 50000);
  const Eigen::MatrixXd rc = realized_covariation(r, 1.0);
  CHECK(rc(0, 1) == doctest::Approx(0.5).epsilon(0.05));
  const Eigen::MatrixXd ic = integrated_covariance(p, 1.0);
  CHECK(ic(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(integrated_det(p, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
  const CovarianceArray a = integrated_covariation_avar(p, 1.0);
  CHECK(a(0, 1, 0, 1) == doctest::Approx(1.0 + 0.25).epsilon(1e-12));
  CHECK(a(0, 0, 0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("single price jump overlay") {
  ModelSpec m;
  m.price_jumps = PriceJumpOverlay{0.0, 0.5, true};
  const SimPath p = simulate(m, 1000, 15);
  CHECK(p.jump_steps.size() == 1);
  CHECK(p.jump_sizes.size() == 1);
}

TEST_CASE("frozen Brownian path") {
  const SimPath p = simulate(ModelSpec{}, 100, 1, 0);
  CHECK(p.y[0] == 0.0);
  CHECK(p.y[1] == doctest::Approx(-0.088116354941037089).epsilon(1e-14));
  CHECK(p.y[2] == doctest::Approx(-0.12649047864350607).epsilon(1e-14));
  CHECK(p.y[3] == doctest::Approx(-0.080225052137170308).epsilon(1e-14));
  CHECK(p.y[100] == doctest::Approx(-0.18146461059440025).epsilon(1e-13));
}
