#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace ddist {

/// Seeded generator used for initialization, shuffling and dropout.
/// Wraps std::mt19937_64 and maps raw draws to floats and ranges itself so
/// results do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer over (seed, salt). Used to give sub-runs
/// independent seeds that depend only on the master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace ddist
