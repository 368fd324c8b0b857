#pragma once

#include <cstdint>

#include "spicer/types.hpp"

namespace spicer {

// xoshiro256++ with splitmix64 seeding. Fixed algorithm so that identical
// seeds give identical streams on every platform; reimplementations in other
// languages can match golden values from the tests.
//
// Draw order is part of the contract:
//   - uniform() consumes one 64-bit output,
//   - gaussian() consumes exactly two uniforms (Box-Muller, cosine branch),
//   - complex_gaussian() consumes two gaussians, i.e. four uniforms,
//     and returns (g0 + i*g1)/sqrt(2) so that E|z|^2 = 1.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Integer in [0, n), n > 0. Rejection-free modulo of a 64-bit draw is
  // biased; uses rejection sampling for exactness.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal N(0, 1).
  double gaussian();

  // Standard complex normal: components N(0, 1/2), E|z|^2 = 1.
  cxd complex_gaussian();

 private:
  std::uint64_t state_[4];
};

}  // namespace spicer
