#include "blmc/conjugate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "blmc/linalg.hpp"

namespace blmc {

namespace {

constexpr int kDenseCap = 5000;

void check_common(const LocationSet& locs, const Matrix& y, const Matrix& x,
                  const ConjugateConfig& config) {
  const int n = locs.size();
  if (n == 0) throw ConfigError("conjugate: empty location set");
  if (n > kDenseCap) {
    throw ConfigError("conjugate: dense-only module capped at n <= " +
                      std::to_string(kDenseCap));
  }
  if (y.rows() != n || x.rows() != n) throw ConfigError("conjugate: row counts disagree");
  if (!y.allFinite()) throw ConfigError("conjugate: responses must be complete and finite");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) {
    throw ConfigError("conjugate: alpha must lie in (0, 1]");
  }
  if (x.rows() <= x.cols()) throw ConfigError("conjugate: requires n > p");
  if (config.mu_beta.rows() != x.cols() || config.mu_beta.cols() != y.cols()) {
    throw ConfigError("conjugate: mu_beta must be p x q");
  }
  if (!(config.nu > y.cols() - 1)) throw ConfigError("conjugate: IW degrees of freedom too small");
}

Matrix spatial_gram(const LocationSet& locs, const Kernel& kernel, double alpha) {
  Matrix k = correlation_matrix(kernel, locs.coords, locs.coords);
  k.diagonal().array() += 1.0 / alpha - 1.0;
  return k;
}

}  // namespace

MniwPosterior response_posterior(const LocationSet& locs, const Matrix& y, const Matrix& x,
                                 const ConjugateConfig& config) {
  check_common(locs, y, x, config);
  const int n = locs.size();
  const int p = static_cast<int>(x.cols());

  Matrix k = spatial_gram(locs, config.kernel, config.alpha);
  Eigen::LLT<Matrix> kllt(k);
  if (kllt.info() != Eigen::Success) {
    throw NumericError("response_posterior: singular K (duplicate locations?)");
  }
  Matrix kinv_x = kllt.solve(x);
  Matrix kinv_y = kllt.solve(y);
  Matrix vr_inv = cholesky(config.v_r);
  vr_inv = vr_inv.triangularView<Eigen::Lower>()
               .solve(Matrix::Identity(p, p))
               .transpose() *
           vr_inv.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));

  MniwPosterior post;
  Matrix v_inv = x.transpose() * kinv_x + vr_inv;
  Eigen::LLT<Matrix> vllt(v_inv);
  if (vllt.info() != Eigen::Success) throw NumericError("response_posterior: V* not SPD");
  post.v = vllt.solve(Matrix::Identity(p, p));
  post.mu = vllt.solve(x.transpose() * kinv_y + vr_inv * config.mu_beta);
  post.psi = config.psi + y.transpose() * kinv_y +
             config.mu_beta.transpose() * vr_inv * config.mu_beta -
             post.mu.transpose() * v_inv * post.mu;
  post.nu = config.nu + n;
  return post;
}

MniwPosterior latent_posterior(const LocationSet& locs, const Matrix& y, const Matrix& x,
                               const ConjugateConfig& config) {
  check_common(locs, y, x, config);
  if (!(config.alpha < 1.0)) {
    throw ConfigError("latent_posterior: alpha must be strictly below 1");
  }
  const int n = locs.size();
  const int p = static_cast<int>(x.cols());
  const int q = static_cast<int>(y.cols());
  const double c = config.alpha / (1.0 - config.alpha);

  Matrix rho = correlation_matrix(config.kernel, locs.coords, locs.coords);
  Eigen::LLT<Matrix> rllt(rho);
  if (rllt.info() != Eigen::Success) {
    throw NumericError("latent_posterior: singular correlation (duplicate locations?)");
  }
  Matrix rho_inv = rllt.solve(Matrix::Identity(n, n));
  Matrix l_r = cholesky(config.v_r);
  Matrix l_r_inv = l_r.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  Matrix vr_inv = l_r_inv.transpose() * l_r_inv;

  // Block formulas.
  Matrix v_inv(p + n, p + n);
  v_inv.topLeftCorner(p, p) = c * x.transpose() * x + vr_inv;
  v_inv.topRightCorner(p, n) = c * x.transpose();
  v_inv.bottomLeftCorner(n, p) = c * x;
  v_inv.bottomRightCorner(n, n) = rho_inv + c * Matrix::Identity(n, n);
  Matrix rhs(p + n, q);
  rhs.topRows(p) = c * x.transpose() * y + vr_inv * config.mu_beta;
  rhs.bottomRows(n) = c * y;
  Eigen::LLT<Matrix> vllt(v_inv);
  if (vllt.info() != Eigen::Success) throw NumericError("latent_posterior: V* not SPD");
  MniwPosterior post;
  post.v = vllt.solve(Matrix::Identity(p + n, p + n));
  post.mu = vllt.solve(rhs);
  post.psi = config.psi + c * y.transpose() * y +
             config.mu_beta.transpose() * vr_inv * config.mu_beta -
             post.mu.transpose() * v_inv * post.mu;
  post.nu = config.nu + n;

  // Augmented normal equations: whitened prior rows as extra observations.
  const double sc = std::sqrt(c);
  Matrix l_rho(rllt.matrixL());
  Matrix v_rho = l_rho.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix x_star = Matrix::Zero(2 * n + p, p + n);
  Matrix y_star = Matrix::Zero(2 * n + p, q);
  x_star.block(0, 0, n, p) = sc * x;
  x_star.block(0, p, n, n) = sc * Matrix::Identity(n, n);
  x_star.block(n, 0, p, p) = l_r_inv;
  x_star.block(n + p, p, n, n) = v_rho;
  y_star.topRows(n) = sc * y;
  y_star.block(n, 0, p, q) = l_r_inv * config.mu_beta;
  Matrix v_inv2 = x_star.transpose() * x_star;
  Eigen::LLT<Matrix> v2llt(v_inv2);
  if (v2llt.info() != Eigen::Success) throw NumericError("latent_posterior: X*'X* not SPD");
  Matrix mu2 = v2llt.solve(x_star.transpose() * y_star);
  Matrix resid = y_star - x_star * mu2;
  Matrix psi2 = config.psi + resid.transpose() * resid;

  double scale = 1.0 + post.mu.cwiseAbs().maxCoeff();
  if ((post.mu - mu2).cwiseAbs().maxCoeff() > 1e-8 * scale ||
      (post.psi - psi2).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + post.psi.cwiseAbs().maxCoeff())) {
    throw NumericError("latent_posterior: block and augmented assemblies disagree");
  }
  return post;
}

Vector consistency_diagnostic(const LocationSet& locs, const Matrix& x, const Kernel& kernel,
                              double alpha, const std::vector<int>& sizes) {
  if (sizes.empty()) throw ConfigError("consistency_diagnostic: no subset sizes");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("consistency_diagnostic: alpha must lie in (0, 1]");
  }
  int prev = 0;
  for (int s : sizes) {
    if (s <= prev || s > locs.size() || s > static_cast<int>(x.rows())) {
      throw ConfigError("consistency_diagnostic: sizes must be increasing and within range");
    }
    prev = s;
  }
  Vector out(static_cast<long>(sizes.size()));
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    const int n = sizes[t];
    LocationSet sub;
    sub.coords = locs.coords.topRows(n);
    Matrix k = correlation_matrix(kernel, sub.coords, sub.coords);
    k.diagonal().array() += 1.0 / alpha - 1.0;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success) {
      throw NumericError("consistency_diagnostic: singular K at size " + std::to_string(n) +
                         " (duplicate locations?)");
    }
    Matrix xn = x.topRows(n);
    Matrix j = xn.transpose() * llt.solve(xn);
    j = 0.5 * (j + j.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(j);
    out[static_cast<long>(t)] = eig.eigenvalues().minCoeff();
  }
  return out;
}

}  // namespace blmc
