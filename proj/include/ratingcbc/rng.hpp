#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace ratingcbc {

/// Seeded generator with platform-independent draws.
///
/// std::uniform_*_distribution and std::shuffle are implementation-defined, so
/// outputs would differ between standard libraries. Only the raw mt19937_64
/// stream and seed_seq are fully specified; everything here is built on those.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}

  /// Derived stream, e.g. (seed, respondent_index).
  Rng(std::initializer_list<std::uint64_t> keys) {
    std::seed_seq seq(keys.begin(), keys.end());
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace ratingcbc
