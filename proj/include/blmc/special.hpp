#pragma once

#include <cmath>
#include <limits>

#include "blmc/types.hpp"

namespace blmc {

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / 2.5066282746310005024;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

/// Regularized lower incomplete gamma P(a, x); series for x < a + 1,
/// Lentz continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw NumericError("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

/// Quantile of Gamma(shape, scale) by bisection on gamma_p.
inline double gamma_quantile(double p, double shape, double scale) {
  if (!(p > 0.0 && p < 1.0)) throw NumericError("gamma_quantile: p outside (0,1)");
  double lo = 0.0, hi = shape * scale;
  while (gamma_p(shape, hi / scale) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (gamma_p(shape, mid / scale) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace blmc
