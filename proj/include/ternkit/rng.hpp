#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ternkit {

// xoshiro256** (Blackman & Vigna), state expanded from a 64-bit seed with
// splitmix64. Integer streams are bit-identical on every platform; normal
// samples go through std::log/std::sqrt and are identical wherever libm
// rounds log the same way.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound). bound must be non-zero.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Standard normal via the Marsaglia polar method.
  double normal();

  // Independent generator derived from this generator's seed and a tag.
  // Does not advance this generator.
  Rng fork(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Fisher-Yates permutation of 0..n-1 driven by rng.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace ternkit
