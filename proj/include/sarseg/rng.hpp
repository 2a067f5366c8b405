#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sarseg {

/// Deterministic random source. mt19937_64 output is pinned by the standard;
/// the derived draws below avoid std::*_distribution, whose streams are
/// implementation-defined, so results are reproducible across toolchains.
class Rand {
 public:
  explicit Rand(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  /// uniform in [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// uniform integer in [lo, hi] inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  /// standard exponential via inverse CDF
  double exponential() { return -std::log1p(-uniform()); }

  /// gamma with integer shape k >= 1 and unit scale (sum of exponentials)
  double gamma_int(int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += exponential();
    return s;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace sarseg
