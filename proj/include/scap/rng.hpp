#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace scap {

/// Seeded generator owned by one scenario.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard. The
/// std distributions are not (their algorithms vary between standard
/// libraries), so the derived draws below are computed by hand to keep runs
/// reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform on [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    // Rejection sampling over the largest multiple of bound.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  void fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t x = next_u64();
      for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
        out[i] = static_cast<std::uint8_t>(x);
        x >>= 8;
      }
    }
  }

  /// Derives an independent child generator (for per-subsystem streams).
  Rng fork() { return Rng(next_u64() ^ 0x9E3779B97F4A7C15ull); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace scap
