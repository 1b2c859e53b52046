#pragma once

#include <vector>

#include "blmc/sampler.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// Posterior predictive summaries at new locations: empirical mean, sd and
/// central interval endpoints per cell, plus the raw draws when kept.
struct PredictionResult {
  Matrix mean, sd, lower, upper;  // n' x q
  double level = 0.95;
  std::vector<Matrix> draws;      // per retained draw, n' x q
};

/// Per-draw factor predictions f_k(U) | f_k, psi_k ~ N(A~ f_k, D~), built
/// from prediction weights rebuilt per retained decay draw (cached on the
/// decay value, since chains revisit values).
std::vector<Matrix> predict_factors(const PosteriorSamples& samples, const Matrix& new_locs,
                                    Rng& rng);

/// Per-draw responses Y_U = X_U beta + F_U Lambda + E, rows of E iid
/// N(0, Sigma); aggregates into empirical summaries at the given level.
PredictionResult predict_responses(const PosteriorSamples& samples,
                                   const std::vector<Matrix>& f_u_draws, const Matrix& x_u,
                                   Rng& rng, double level = 0.95, bool keep_draws = false);

/// Gaussian summaries of the intercept-centered latent process from the
/// streamed moments, the posterior-mean finite-sample covariance and its
/// implied correlation.
struct LatentSummary {
  Matrix mean, sd, lower, upper;  // n x q
  Matrix omega_cov;               // q x q posterior mean of Omega
  Matrix omega_corr;              // correlation implied by omega_cov
  double level = 0.95;
};

LatentSummary latent_summary(const PosteriorSamples& samples, double level = 0.95);

/// Finite-sample covariance of one latent draw:
/// (1/n) sum_i (w_i - w_bar)(w_i - w_bar)'.
Matrix latent_cov(const Matrix& omega);

}  // namespace blmc
