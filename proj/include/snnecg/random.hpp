#pragma once

// Deterministic random streams.
//
// One master seed fans out into independent streams addressed by a small
// tuple of counters (stage, epoch, beat, window, ...). Streams are derived by
// hashing, never by sharing a generator, so the draw sequence of any stream is
// independent of how work is scheduled across threads.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>

namespace snnecg {

namespace stage {
inline constexpr std::uint64_t kEncodeGaussian = 1;
inline constexpr std::uint64_t kEncodeStdp = 2;
inline constexpr std::uint64_t kEncodeRstdp = 3;
inline constexpr std::uint64_t kEncodeInfer = 4;
inline constexpr std::uint64_t kStdpInit = 5;
inline constexpr std::uint64_t kDropout = 6;
inline constexpr std::uint64_t kRstdpInit = 7;
inline constexpr std::uint64_t kSplit = 8;
inline constexpr std::uint64_t kSynth = 9;
inline constexpr std::uint64_t kShuffle = 10;
}  // namespace stage

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Hashes a master seed and a counter path into a stream key.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = splitmix64(seed);
  for (auto c : path) k = splitmix64(k ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
  return k;
}

/// A 64-bit Mersenne Twister with portable real-valued draws.
///
/// std::uniform_real_distribution is implementation-defined; models must be
/// byte-identical across standard libraries, so doubles are built from the
/// top 53 bits directly.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : engine_(derive_key(seed, path)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), n > 0. Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by an Rng (std::shuffle's draw pattern is
/// implementation-defined).
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace snnecg
