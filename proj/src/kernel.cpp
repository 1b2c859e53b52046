#include "blmc/kernel.hpp"

#include <cmath>

namespace blmc {

double correlation(const Kernel& k, double dist) {
  if (!(k.decay > 0.0)) throw ConfigError("kernel decay must be positive");
  if (std::isnan(dist) || dist < 0.0) {
    throw NumericError("correlation: distance must be finite and nonnegative");
  }
  return std::exp(-k.decay * dist);
}

Matrix correlation_matrix(const Kernel& k, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ConfigError("correlation_matrix: coordinate dimension mismatch");
  }
  const int na = static_cast<int>(a.rows());
  const int nb = static_cast<int>(b.rows());
  Matrix out(na, nb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      out(i, j) = correlation(k, (a.row(i) - b.row(j)).norm());
    }
  }
  return out;
}

double effective_range(const Kernel& k) {
  if (!(k.decay > 0.0)) throw ConfigError("kernel decay must be positive");
  return -std::log(0.05) / k.decay;
}

}  // namespace blmc
