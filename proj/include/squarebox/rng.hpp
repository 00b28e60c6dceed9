#pragma once

#include <array>
#include <cstdint>

namespace squarebox {

// xoshiro256** seeded through splitmix64. All draws are built from the raw
// 64-bit stream with fixed arithmetic, so a seed reproduces the same sequence
// on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform integer in the closed range [lo, hi]. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform real in [0, 1) with 53 bits of resolution.
  double uniform_real();
  // -1 or +1 with equal probability.
  int rademacher();
  // Unit-rate exponential.
  double exponential();
  // Standard normal (Box-Muller, one output per call).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace squarebox
