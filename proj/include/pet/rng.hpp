#pragma once

#include <cmath>
#include <cstdint>

namespace pet {

// xoshiro256++ seeded through splitmix64. A fixed, portable generator: the
// integer stream is identical on every platform for a given seed, which is
// what keeps generated scenes and golden files reproducible. Floating-point
// helpers (unit, normal) are deterministic per platform; normal draws use
// Box-Muller.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t z = seed;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      word = x ^ (x >> 31);
    }
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased draw in [0, n) by masked rejection.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t mask = mask_for(n - 1);
    uint64_t v;
    do {
      v = next() & mask;
    } while (v >= n);
    return v;
  }

  // Inclusive integer range.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + int64_t(below(uint64_t(hi - lo + 1)));
  }

  // [0, 1) with 53 random mantissa bits.
  double unit() { return double(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; caches the second draw.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = unit();
    } while (u1 == 0.0);
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  static uint64_t mask_for(uint64_t v) {
    uint64_t m = v;
    m |= m >> 1;
    m |= m >> 2;
    m |= m >> 4;
    m |= m >> 8;
    m |= m >> 16;
    m |= m >> 32;
    return m;
  }

  uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pet
