#pragma once

#include "blmc/types.hpp"

namespace blmc {

enum class KernelFamily { Exponential };

/// Stationary spatial correlation with decay parameter (1/distance units).
/// Only the exponential family ships; the enum leaves room for Matern.
struct Kernel {
  KernelFamily family = KernelFamily::Exponential;
  double decay = 1.0;
};

/// exp(-decay * dist); dist must be finite and nonnegative.
double correlation(const Kernel& k, double dist);

/// Entry (i, j) = correlation between row i of a and row j of b.
/// Symmetric with unit diagonal when a and b are the same set.
Matrix correlation_matrix(const Kernel& k, const Matrix& a, const Matrix& b);

/// Distance where the correlation drops to 0.05: -ln(0.05)/decay.
double effective_range(const Kernel& k);

}  // namespace blmc
