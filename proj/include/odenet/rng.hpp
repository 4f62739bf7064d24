#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace odenet {

/// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed(mix_seed(a) ^ b); }

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b) ^ c);
}

/// mt19937_64 with hand-rolled distributions.  The engine's output sequence
/// is fully specified by the standard and the transforms below are ours, so
/// streams are reproducible across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in (0,1]; never returns 0 so log() is safe.
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;  // 53 random bits
    return (bits + 1.0) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double bernoulli(double prob) { return uniform() <= prob ? 1.0 : 0.0; }

  double poisson(double mean) {
    if (mean <= 0.0) return 0.0;
    // Additivity splits large means into Knuth-sized pieces.
    double total = 0.0;
    while (mean > 30.0) {
      mean *= 0.5;
      total += poisson(mean);
    }
    const double limit = std::exp(-mean);
    double prod = 1.0;
    double count = -1.0;
    do {
      count += 1.0;
      prod *= uniform();
    } while (prod > limit);
    return total + count;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace odenet
