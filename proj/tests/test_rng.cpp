#include "doctest.h"

#include <cmath>
#include <set>

#include "rvlab/rng.hpp"

using namespace rvlab;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of their coordinates") {
  const CounterRng a(42, 7), b(42, 7), c(43, 7), d(42, 8);
  CHECK(a.bits(3, 1) == b.bits(3, 1));
  CHECK(a.bits(3, 1) != c.bits(3, 1));
  CHECK(a.bits(3, 1) != d.bits(3, 1));
  CHECK(a.bits(3, 1) != a.bits(3, 2));
  CHECK(a.bits(3, 1) != a.bits(4, 1));
}

TEST_CASE("uniforms lie in the open unit interval") {
  const CounterRng rng(1, 0);
  for (std::uint32_t i = 0; i < 10000; ++i) {
    const auto u = rng.uniform_pair(i, 0);
    REQUIRE(u[0] > 0.0);
    REQUIRE(u[0] < 1.0);
    REQUIRE(u[1] > 0.0);
    REQUIRE(u[1] < 1.0);
  }
}

TEST_CASE("normal pairs have unit variance and no correlation") {
  const CounterRng rng(2024, 3);
  const int n = 200000;
  double s1 = 0, s2 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = rng.normal_pair(static_cast<std::uint32_t>(i), 0);
    s1 += z[0] + z[1];
    s2 += z[0] * z[0] + z[1] * z[1];
    cross += z[0] * z[1];
  }
  const double m = 2.0 * n;
  CHECK(std::abs(s1 / m) < 4.0 / std::sqrt(m));
  CHECK(std::abs(s2 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(cross / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("lane layout keeps purposes apart") {
  std::set<std::uint32_t> lanes;
  for (std::uint32_t p = 0; p < 6; ++p)
    for (std::uint32_t c = 0; c < 4; ++c)
      for (std::uint32_t i = 0; i < 3; ++i) lanes.insert(make_lane(p, c, i));
  CHECK(lanes.size() == 6 * 4 * 3);
}
