#pragma once

#include <array>
#include <cstdint>

namespace rvlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").  Maps a 128-bit counter and 64-bit key to 128
/// pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random source.  Every draw is a pure function of
/// (seed, stream, step, lane): there is no hidden state, so replications and
/// simulation steps can be generated in any order, on any number of threads,
/// and still reproduce bit-identically.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::array<std::uint32_t, 4> bits(std::uint32_t step, std::uint32_t lane) const;

  /// Two uniforms in the open interval (0, 1), 53-bit resolution.
  std::array<double, 2> uniform_pair(std::uint32_t step, std::uint32_t lane) const;
  double uniform(std::uint32_t step, std::uint32_t lane) const {
    return uniform_pair(step, lane)[0];
  }

  /// Two independent standard normals (Box-Muller on uniform_pair).
  std::array<double, 2> normal_pair(std::uint32_t step, std::uint32_t lane) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint32_t, 2> key_;
};

/// Lane identifiers: purpose in the top byte, component and sub-index below.
constexpr std::uint32_t make_lane(std::uint32_t purpose, std::uint32_t component,
                                  std::uint32_t index = 0) {
  return (purpose << 24) | ((component & 0xFFu) << 16) | (index & 0xFFFFu);
}

}  // namespace rvlab
