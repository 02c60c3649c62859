#pragma once

// Counter-based random streams. Every consumer derives a fresh engine from a
// (seed, tag, counters...) key, so Monte Carlo runs are reproducible and
// independent of scheduling or update order.

#include <cmath>
#include <cstdint>
#include <limits>

namespace ztsbm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with splitmix-expanded seeding.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t s_[4];
};

inline Rng keyed_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0,
                     std::uint64_t b = 0) {
  std::uint64_t sm = seed;
  std::uint64_t key = splitmix64(sm);
  sm ^= tag * 0x9e3779b97f4a7c15ULL;
  key ^= splitmix64(sm);
  sm ^= a + 0xd1b54a32d192ed03ULL;
  key ^= splitmix64(sm);
  sm ^= b + 0x8cb92ba72f3d8dd7ULL;
  key ^= splitmix64(sm);
  return Rng(key);
}

inline double uniform01(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform draw from {0, ..., n-1} via 128-bit multiply-shift.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(g()) * n) >> 64);
}

// Knuth product method, chunked so exp(-mean) stays well inside double range.
inline long long poisson_draw(Rng& g, double mean) {
  long long n = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double lam = remaining > 30.0 ? 30.0 : remaining;
    remaining -= lam;
    const double limit = std::exp(-lam);
    long long k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform01(g);
    } while (prod > limit);
    n += k - 1;
  }
  return n;
}

}  // namespace ztsbm
