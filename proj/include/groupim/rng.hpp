#pragma once

#include <cstdint>
#include <vector>

namespace groupim {

// SplitMix64: small, fast PRNG with platform-independent output. All
// randomized behavior in the library (sampling, shuffles, init) routes
// through this so a seed pins every bit of a run.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Finalizer usable as a standalone hash.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Counter-based sub-stream key: (seed, a, b) -> independent seed.
  // Used for per-(epoch, group) negative-sampling streams so results do
  // not depend on batch composition or iteration order.
  static std::uint64_t stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = mix(seed + 0x9e3779b97f4a7c15ULL);
    x = mix(x ^ (a + 0xbf58476d1ce4e5b9ULL));
    x = mix(x ^ (b + 0x94d049bb133111ebULL));
    return x;
  }

 private:
  std::uint64_t state_;
};

}  // namespace groupim
