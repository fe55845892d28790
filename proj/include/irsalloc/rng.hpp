#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace irsalloc {

// Deterministic random source. mt19937_64 raw output is fully specified by the
// standard; the double conversions below avoid std::uniform_real_distribution
// and std::normal_distribution, whose exact sequences are implementation
// defined. All stochastic parts of the project draw through this class so a
// seed pins every result bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly symmetric complex normal with the given total variance.
  std::complex<double> cnormal(double variance) {
    double s = std::sqrt(variance / 2.0);
    double re = s * gaussian();
    double im = s * gaussian();
    return {re, im};
  }

  // Uniform phase in [0, 2*pi).
  double phase() { return uniform(0.0, 2.0 * kPi); }

  std::uint64_t raw() { return engine_(); }

  // Independent named stream derived from a base seed, so different consumers
  // (channel sampling, reflection init, ...) never share draws.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  // splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace irsalloc
