#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Seeded random streams. The generator is xoshiro256** seeded through
// splitmix64; substream() derives independent streams from (root, key1, key2)
// so parallel workers can be given counter-based streams whose output does
// not depend on scheduling. All samplers are hand-rolled to keep byte-level
// reproducibility independent of the standard library implementation.

namespace randbin {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64_next(s);
  }

  // Independent stream keyed on (root, k1, k2); used for sweep points and
  // trial blocks.
  static Rng substream(std::uint64_t root, std::uint64_t k1, std::uint64_t k2 = 0) {
    std::uint64_t s = root;
    std::uint64_t a = splitmix64_next(s) ^ (k1 * 0xd1342543de82ef95ULL);
    std::uint64_t b = splitmix64_next(s) ^ (k2 * 0xaf251af3b0f025b5ULL);
    std::uint64_t mixed = a;
    mixed ^= b + 0x9e3779b97f4a7c15ULL + (mixed << 6) + (mixed >> 2);
    return Rng(mixed);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1]; safe to pass to log().
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Lemire rejection, unbiased.
  std::uint64_t uniform_int(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    std::uint64_t l = static_cast<std::uint64_t>(m);
    if (l < bound) {
      std::uint64_t t = (-bound) % bound;
      while (l < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        l = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential() { return -std::log(uniform01_open()); }

  double normal() {
    // Marsaglia polar method; one spare kept across calls.
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Exact inversion for lambda <= 30; above that a rounded normal
  // approximation is used (callers in this project only hit the large-lambda
  // branch where the absolute effect of the approximation is below 1e-6).
  std::int64_t poisson(double lambda) {
    if (lambda < 0) throw std::invalid_argument("poisson: negative rate");
    if (lambda == 0) return 0;
    if (lambda <= 30.0) {
      const double target = uniform01();
      double p = std::exp(-lambda);
      double cdf = p;
      std::int64_t k = 0;
      while (cdf < target && k < 400) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
      }
      return k;
    }
    const double x = lambda + std::sqrt(lambda) * normal();
    return x < 0.5 ? 0 : static_cast<std::int64_t>(std::llround(x));
  }

  // Exact for n <= 64 (bit loop) and for n*min(p,1-p) <= 30 (inversion);
  // otherwise normal approximation, same caveat as poisson().
  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial: bad args");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    bool flipped = p > 0.5;
    double q = flipped ? 1.0 - p : p;
    std::int64_t k;
    if (n <= 64) {
      k = 0;
      for (std::int64_t i = 0; i < n; ++i) k += uniform01() < q ? 1 : 0;
    } else if (static_cast<double>(n) * q <= 30.0) {
      const double target = uniform01();
      const double ratio = q / (1.0 - q);
      double pmf = std::exp(static_cast<double>(n) * std::log1p(-q));
      double cdf = pmf;
      k = 0;
      while (cdf < target && k < n) {
        pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
        cdf += pmf;
      }
    } else {
      const double mean = static_cast<double>(n) * q;
      const double sd = std::sqrt(mean * (1.0 - q));
      double x = mean + sd * normal();
      if (x < 0) x = 0;
      if (x > static_cast<double>(n)) x = static_cast<double>(n);
      k = static_cast<std::int64_t>(std::llround(x));
    }
    return flipped ? n - k : k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace randbin
