#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mintime {

// splitmix64 finalizer; good enough to decorrelate derived streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

inline uint64_t hash_str(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derive an independent stream seed from a root seed, a purpose tag and up to
// three indices. Streams keyed this way never depend on evaluation order,
// which is what keeps parallel stages byte-deterministic.
inline uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t a = 0,
                            uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = mix64(root, hash_str(tag));
  h = mix64(h, a);
  h = mix64(h, b);
  h = mix64(h, c);
  return h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    // 53-bit mantissa draw; avoids distribution objects so results only
    // depend on the engine's bit stream.
    const uint64_t bits = engine_() >> 11;
    const double u = static_cast<double>(bits) * 0x1p-53;
    return lo + u * (hi - lo);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller with cached second value.
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

  // Uniform integer in [0, n); n must be > 0.
  uint64_t index(uint64_t n) {
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mintime
