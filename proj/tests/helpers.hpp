#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <vector>

#include "blmc/geometry.hpp"
#include "blmc/kernel.hpp"
#include "blmc/model.hpp"
#include "blmc/nngp.hpp"
#include "blmc/rng.hpp"
#include "blmc/types.hpp"

namespace blmc::testing {

inline Matrix random_locations(int n, Rng& rng, double scale = 1.0) {
  Matrix m(n, 2);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = scale * rng.uniform();
    m(i, 1) = scale * rng.uniform();
  }
  return m;
}

inline Matrix dense_corr(const LocationSet& locs, const Kernel& k) {
  return correlation_matrix(k, locs.coords, locs.coords);
}

// Densified A from a factor (strictly lower).
inline Matrix dense_a(const NNGPFactor& fac) {
  const int n = fac.size();
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int t = fac.row_ptr[static_cast<std::size_t>(i)];
         t < fac.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
      a(i, fac.col_idx[static_cast<std::size_t>(t)]) = fac.weight[static_cast<std::size_t>(t)];
    }
  }
  return a;
}

// V = D^{-1/2} (I - A) densified.
inline Matrix dense_whitener(const NNGPFactor& fac) {
  const int n = fac.size();
  Matrix v = Matrix::Identity(n, n) - dense_a(fac);
  for (int i = 0; i < n; ++i) v.row(i) /= std::sqrt(fac.diag[i]);
  return v;
}

// (I - A)' D^{-1} (I - A) densified.
inline Matrix dense_precision(const NNGPFactor& fac) {
  Matrix v = dense_whitener(fac);
  return v.transpose() * v;
}

inline double dense_mvn_logpdf(const Vector& x, const Matrix& cov) {
  const int n = static_cast<int>(x.size());
  Eigen::LLT<Matrix> llt(cov);
  Vector alpha = llt.solve(x);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(Matrix(llt.matrixL())(i, i));
  return -0.5 * (n * std::log(2.0 * M_PI) + logdet + x.dot(alpha));
}

// Dense assembly of the factor-block stacked system (the closed-form side
// of the factor conditional): rows are whitened observed loadings then the
// K whiteners; columns follow vec(F) = [f_1; ...; f_K].
struct DenseFactorSystem {
  Matrix x_tilde;
  Vector y_tilde;
};

inline DenseFactorSystem dense_factor_system(const Dataset& data, const Matrix& beta,
                                             const Matrix& lambda, const Matrix& sigma,
                                             const std::vector<NNGPFactor>& factors) {
  const int n = data.n();
  const int k = static_cast<int>(factors.size());
  int total_obs = data.total_observed;
  DenseFactorSystem sys;
  sys.x_tilde = Matrix::Zero(total_obs + k * n, k * n);
  sys.y_tilde = Vector::Zero(total_obs + k * n);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    const auto& os = data.obs_idx[static_cast<std::size_t>(i)];
    const int h = static_cast<int>(os.size());
    Matrix sig_os(h, h);
    for (int a = 0; a < h; ++a) {
      for (int b = 0; b < h; ++b) sig_os(a, b) = sigma(os[a], os[b]);
    }
    Matrix l = Eigen::LLT<Matrix>(sig_os).matrixL();
    Matrix lam_os(h, k);
    for (int a = 0; a < h; ++a) {
      for (int kk = 0; kk < k; ++kk) lam_os(a, kk) = lambda(kk, os[a]);
    }
    Matrix w = l.triangularView<Eigen::Lower>().solve(lam_os);
    Vector resid(h);
    for (int a = 0; a < h; ++a) resid[a] = data.y(i, os[a]) - data.x.row(i).dot(beta.col(os[a]));
    Vector rw = l.triangularView<Eigen::Lower>().solve(resid);
    for (int a = 0; a < h; ++a) {
      for (int kk = 0; kk < k; ++kk) sys.x_tilde(row + a, kk * n + i) = w(a, kk);
      sys.y_tilde[row + a] = rw[a];
    }
    row += h;
  }
  for (int kk = 0; kk < k; ++kk) {
    sys.x_tilde.block(total_obs + kk * n, kk * n, n, n) = dense_whitener(factors[static_cast<std::size_t>(kk)]);
  }
  return sys;
}

// One-sample Kolmogorov-Smirnov p-value against the standard normal.
inline double ks_pvalue_standard_normal(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double cdf = 0.5 * std::erfc(-x[i] / std::sqrt(2.0));
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::fabs(cdf - lo), std::fabs(hi - cdf)));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    p += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  }
  return std::min(1.0, std::max(0.0, p));
}

// Simple complete dataset over random locations.
inline Dataset make_dataset(const Matrix& y, const Matrix& x, const Matrix& coords) {
  Dataset d;
  d.locs = make_location_set(coords);
  const int n = static_cast<int>(y.rows());
  d.y.resize(n, y.cols());
  d.x.resize(n, x.cols());
  d.obs.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(y.cols()), 1);
  for (int s = 0; s < n; ++s) {
    int model = d.locs.order[static_cast<std::size_t>(s)];
    d.y.row(model) = y.row(s);
    d.x.row(model) = x.row(s);
  }
  for (int i = 0; i < n; ++i) d.ids.push_back(std::to_string(i + 1));
  d.finalize();
  return d;
}

}  // namespace blmc::testing
