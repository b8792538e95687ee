#pragma once

#include <cstdint>
#include <vector>

namespace ldgraph {

/// SplitMix64 (Steele/Lea/Vigna). Every piece of randomness in the library
/// flows through this generator so that splits, weight inits and dropout
/// masks are reproducible bit-for-bit across platforms. std:: distributions
/// are implementation-defined and deliberately not used.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased via rejection. bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t rem = (UINT64_MAX % bound + 1) % bound;
    const std::uint64_t limit = UINT64_MAX - rem;
    std::uint64_t x = next();
    while (x > limit) x = next();
    return x % bound;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Derive an independent child stream (the SplitMix construction).
  SplitMix64 split() { return SplitMix64(next()); }

  /// Fisher-Yates, fixed iteration order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Stateless mix of several seeds into one, used to derive per-cell training
/// seeds in sweeps. Order-sensitive by construction.
inline std::uint64_t mix_seeds(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (std::uint64_t p : parts) {
    SplitMix64 g(h ^ p);
    h = g.next();
  }
  return h;
}

}  // namespace ldgraph
