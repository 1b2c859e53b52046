#include "blmc/predict.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "blmc/nngp.hpp"
#include "blmc/special.hpp"

namespace blmc {

namespace {

double interp_quantile(std::vector<double>& sorted, double prob) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = prob * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

std::vector<Matrix> predict_factors(const PosteriorSamples& samples, const Matrix& new_locs,
                                    Rng& rng) {
  if (samples.f_draws.empty()) throw ConfigError("predict_factors: no retained factor draws");
  const int k = samples.num_factors;
  const int np = static_cast<int>(new_locs.rows());
  const int m = samples.config.num_neighbors;
  LocationSet ref;
  ref.coords = samples.ref_coords;
  ref.order.resize(static_cast<std::size_t>(samples.n));
  for (int i = 0; i < samples.n; ++i) ref.order[static_cast<std::size_t>(i)] = i;

  std::map<double, PredictionWeights> cache;
  auto weights_for = [&](double decay) -> const PredictionWeights& {
    auto it = cache.find(decay);
    if (it == cache.end()) {
      it = cache
               .emplace(decay, build_prediction_weights(
                                   ref, new_locs, m,
                                   Kernel{KernelFamily::Exponential, decay},
                                   samples.config.threads))
               .first;
    }
    return it->second;
  };

  std::vector<Matrix> out;
  out.reserve(samples.f_draws.size());
  for (const auto& [draw_idx, f] : samples.f_draws) {
    const Vector& psi = samples.psi[static_cast<std::size_t>(draw_idx)];
    Matrix f_u(np, k);
    for (int kk = 0; kk < k; ++kk) {
      const PredictionWeights& w = weights_for(psi[kk]);
      Vector mean = w.conditional_mean(f.col(kk));
      for (int i = 0; i < np; ++i) {
        f_u(i, kk) = mean[i] + std::sqrt(w.diag[i]) * rng.normal();
      }
    }
    out.push_back(std::move(f_u));
  }
  return out;
}

PredictionResult predict_responses(const PosteriorSamples& samples,
                                   const std::vector<Matrix>& f_u_draws, const Matrix& x_u,
                                   Rng& rng, double level, bool keep_draws) {
  if (f_u_draws.size() != samples.f_draws.size()) {
    throw ConfigError("predict_responses: factor draw count mismatch");
  }
  if (x_u.cols() != samples.p) throw ConfigError("predict_responses: X_U must have p columns");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("predict_responses: level in (0,1)");
  const int np = static_cast<int>(x_u.rows());
  const int q = samples.q;
  const auto n_draws = static_cast<int>(f_u_draws.size());

  std::vector<Matrix> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (int t = 0; t < n_draws; ++t) {
    int draw_idx = samples.f_draws[static_cast<std::size_t>(t)].first;
    const Matrix& beta = samples.beta[static_cast<std::size_t>(draw_idx)];
    const Matrix& lambda = samples.lambda[static_cast<std::size_t>(draw_idx)];
    const Matrix& sigma = samples.sigma[static_cast<std::size_t>(draw_idx)];
    Matrix l_sigma = cholesky(sigma);
    Matrix z = sample_standard_normal(np, q, rng);
    draws.push_back(x_u * beta + f_u_draws[static_cast<std::size_t>(t)] * lambda +
                    z * l_sigma.transpose());
  }

  PredictionResult res;
  res.level = level;
  res.mean = Matrix::Zero(np, q);
  res.sd = Matrix::Zero(np, q);
  res.lower = Matrix::Zero(np, q);
  res.upper = Matrix::Zero(np, q);
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> cell(static_cast<std::size_t>(n_draws));
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < q; ++j) {
      double s = 0.0;
      for (int t = 0; t < n_draws; ++t) {
        cell[static_cast<std::size_t>(t)] = draws[static_cast<std::size_t>(t)](i, j);
        s += cell[static_cast<std::size_t>(t)];
      }
      double mean = s / n_draws;
      double ss = 0.0;
      for (int t = 0; t < n_draws; ++t) {
        double d = cell[static_cast<std::size_t>(t)] - mean;
        ss += d * d;
      }
      res.mean(i, j) = mean;
      res.sd(i, j) = n_draws > 1 ? std::sqrt(ss / (n_draws - 1)) : 0.0;
      std::sort(cell.begin(), cell.end());
      res.lower(i, j) = interp_quantile(cell, tail);
      res.upper(i, j) = interp_quantile(cell, 1.0 - tail);
    }
  }
  if (keep_draws) res.draws = std::move(draws);
  return res;
}

Matrix latent_cov(const Matrix& omega) {
  const auto n = static_cast<double>(omega.rows());
  Eigen::RowVectorXd mean = omega.colwise().mean();
  Matrix centered = omega.rowwise() - mean;
  return centered.transpose() * centered / n;
}

LatentSummary latent_summary(const PosteriorSamples& samples, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("latent_summary: level in (0,1)");
  LatentSummary out;
  out.level = level;
  out.mean = samples.omega_mean;
  out.sd = samples.omega_var().cwiseSqrt();
  // Gaussian intervals from the streamed moments.
  double z = 0.0;
  {
    double lo = 0.0, hi = 10.0, target = 0.5 + 0.5 * level;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    z = 0.5 * (lo + hi);
  }
  out.lower = out.mean - z * out.sd;
  out.upper = out.mean + z * out.sd;
  out.omega_cov = samples.omega_cov_mean;
  const int q = static_cast<int>(out.omega_cov.rows());
  out.omega_corr = Matrix::Identity(q, q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      double denom = std::sqrt(out.omega_cov(i, i) * out.omega_cov(j, j));
      out.omega_corr(i, j) = denom > 0.0 ? out.omega_cov(i, j) / denom : (i == j ? 1.0 : 0.0);
    }
  }
  return out;
}

}  // namespace blmc
