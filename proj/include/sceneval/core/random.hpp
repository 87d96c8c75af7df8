#pragma once

// Seeded randomness whose output depends only on the seed material, never on
// the standard library's distribution implementations.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sceneval {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Seed derived from a base seed plus any number of string parts.
  template <typename... Parts>
  static SeededRng derive(std::uint64_t seed, const Parts &...parts) {
    std::uint64_t h = mix64(seed);
    ((h = fnv1a64(std::string_view(parts), h ^ 0x1f), h = mix64(h)), ...);
    return SeededRng(h);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

private:
  std::mt19937_64 engine_;
};

} // namespace sceneval
