#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace limebayes {

/// Deterministic random source for samplers and synthetic data.
///
/// Wraps a fixed-seed mt19937_64 and derives all variates through explicit
/// transforms (no std::*_distribution objects, whose internal caching varies
/// across standard libraries). Two runs with the same seed produce the same
/// stream bit for bit.
class RandomSource {
public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call and
  /// keeps no cached spare, so the stream position is easy to reason about.
  double normal01() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal01(); }

  std::size_t index_below(std::size_t n) {
    // rejection-free modulo bias is irrelevant at these ranges, but cheap to avoid
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
  }

private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to decorrelate derived seed streams
/// (e.g. chain-init draws vs. the chains' own walks).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace limebayes
