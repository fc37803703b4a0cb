#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace seesaw {

/// SplitMix64 finalizer. Used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return mix64(seed ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// Seedable, splittable random stream.
///
/// The engine is mt19937_64 (bit-exact across standard libraries). The
/// conversions to uniform/normal variates are done here rather than through
/// <random> distributions, whose output is implementation-defined, so a run is
/// reproducible from its root seed on any toolchain.
///
/// `split(key)` depends only on the seed this stream was created with, never
/// on how many numbers have been drawn from it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t key) const { return Rng(derive_seed(seed_, key)); }

  Rng split(std::initializer_list<std::uint64_t> keys) const {
    std::uint64_t s = seed_;
    for (auto k : keys) s = derive_seed(s, k);
    return Rng(s);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace seesaw
