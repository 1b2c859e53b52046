#pragma once

#include <cmath>
#include <cstdint>

#include "blmc/types.hpp"

namespace blmc {

/// Deterministic counter-based generator (splitmix64). Every stochastic
/// operation takes an Rng handle explicitly so a run replays bit-exactly
/// from its seed. Never share one handle across concurrent tasks.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (no spare caching, two uniforms per draw).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Gamma(shape, scale) by Marsaglia-Tsang squeeze; shape < 1 boosted.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw NumericError("gamma draw requires positive shape and scale");
    }
    if (shape < 1.0) {
      double u = 1.0 - uniform();  // (0, 1]
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
      if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
        return d * v * scale;
      }
    }
  }

  /// Inverse-Gamma(a, b): reciprocal of a Gamma(a, rate = b) draw.
  double inverse_gamma(double a, double b) { return 1.0 / gamma(a, 1.0 / b); }

  double chi_square(double df) { return gamma(0.5 * df, 2.0); }

 private:
  std::uint64_t state_;
};

}  // namespace blmc
