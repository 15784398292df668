#pragma once

#include <cassert>
#include <cstdint>
#include <random>
#include <vector>

namespace btsynth {

/// Deterministic random source. All bounded sampling is implemented here
/// rather than with std distributions, so that identical seeds give
/// identical streams regardless of standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_u64(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) {
      v = engine_();
    }
    return v % n;
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform_u64(n));
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool chance(double p) { return uniform01() < p; }

  /// Draws an index with probability proportional to its integer weight.
  std::size_t weighted_index(const std::vector<std::uint64_t>& weights) {
    std::uint64_t total = 0;
    for (std::uint64_t w : weights) {
      total += w;
    }
    assert(total > 0);
    std::uint64_t r = uniform_u64(total);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r < weights[i]) {
        return i;
      }
      r -= weights[i];
    }
    return weights.size() - 1;  // unreachable
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace btsynth
