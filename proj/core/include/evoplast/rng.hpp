#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace evoplast {

// One SplitMix64 step. Advances `state` and returns the next value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream derivation. Every random decision in the project is
// seeded through these, so any component (a generation, a trial, a mutation)
// can be re-derived from (master seed, indices) without replaying RNG state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index);

// xoshiro256++ with explicitly coded distributions. The standard library's
// distribution objects are implementation-defined, which would make saved
// artifacts differ across toolchains; these are pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Box-Muller, no cached spare.
  double normal(double mean = 0.0, double sigma = 1.0);
  bool bernoulli(double p);

  // First k entries of a random permutation of {0, ..., n-1}.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t s_[4];
};

}  // namespace evoplast
