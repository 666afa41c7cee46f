#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bioir {

/// Seeded random source with platform-stable output. std::mt19937_64 has a
/// standard-specified stream, but the std distributions do not, so uniform
/// draws are derived from the raw 64-bit output here. Every stochastic step
/// in the library (init, negative sampling, shuffling) goes through this
/// class so runs are reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 bits of randomness.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). n must be nonzero.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t span = n;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<std::size_t>(x % span);
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  /// Derived generator for an independent stream (e.g. one run of an
  /// ensemble) without perturbing this generator's sequence.
  Rng fork(std::uint64_t stream) const {
    return Rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 2)) ^ 0x6a09e667f3bcc909ULL);
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
};

}  // namespace bioir
