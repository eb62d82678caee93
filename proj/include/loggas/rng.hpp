#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace loggas {

// Seed derivation and variate generation are written out explicitly so that
// output streams are identical across platforms and standard libraries.
// std::mt19937_64 itself is fully specified by the standard; the std::
// distributions are not, so we avoid them.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a stream seed from a master seed and a stream index. Streams, not
// threads, are the unit of reproducibility.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // uniform on (0,1]; never returns 0 so log() is always finite
  double uniform() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with one cached variate
  double normal() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang for shape alpha, unit scale
  double gamma(double alpha) {
    if (alpha < 1.0) {
      double u = uniform();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    double d = alpha - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  // chi distribution with (possibly non-integer) nu degrees of freedom
  double chi(double nu) { return std::sqrt(2.0 * gamma(0.5 * nu)); }

 private:
  std::mt19937_64 gen_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace loggas
