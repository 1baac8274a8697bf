#pragma once

// Deterministic randomness.  Poisson sampling is implemented here (PTRD
// transformed rejection for large means, sequential inversion for small)
// rather than through std::poisson_distribution, whose algorithm is
// implementation-defined: reruns with one seed must reproduce datasets
// byte for byte.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace qfiflow {

// splitmix64 step: derives independent per-purpose seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1), 53-bit
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  std::int64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    return (mean < 10.0) ? poisson_inversion(mean) : poisson_ptrd(mean);
  }

 private:
  std::int64_t poisson_inversion(double mean) {
    const double target = uniform();
    double p = std::exp(-mean), s = p;
    std::int64_t k = 0;
    const std::int64_t cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 100.0);
    while (target > s && k < cap) {
      ++k;
      p *= mean / static_cast<double>(k);
      s += p;
    }
    return k;
  }

  // Hoermann's PTRD rejection sampler; constants from the published method.
  std::int64_t poisson_ptrd(double mean) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double ln_mean = std::log(mean);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      const double k = kf;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <= k * ln_mean - mean - std::lgamma(k + 1.0))
        return static_cast<std::int64_t>(kf);
    }
  }

  std::mt19937_64 eng_;
};

}  // namespace qfiflow
