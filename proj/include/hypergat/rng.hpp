#pragma once

#include <cstdint>
#include <vector>

namespace hypergat {

// SplitMix64: a 64-bit counter-based generator (Weyl sequence stepped by the
// golden-ratio increment, output finalized by a variance-maximizing mixer).
// Every consumer in this codebase draws from this generator so that runs are
// reproducible from a single seed, and so another implementation language can
// replay the exact stream:
//
//   state_{n+1} = state_n + 0x9E3779B97F4A7C15
//   out(x): x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
//           x ^= x >> 27; x *= 0x94D049BB133111EB;
//           x ^= x >> 31; return x
//
//   next_double(): top 53 bits of next_u64(), scaled to [0, 1)
//   below(n):      128-bit multiply-high of next_u64() with n
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace hypergat
