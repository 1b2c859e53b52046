#pragma once

#include <vector>

#include "blmc/geometry.hpp"
#include "blmc/kernel.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// Fixed-hyperparameter conjugate setup: alpha is the proportion of total
/// variability carried by the spatial term, the kernel decay is fixed, and
/// (beta, Sigma) carry an MNIW prior.
struct ConjugateConfig {
  double alpha = 1.0;
  Kernel kernel;
  Matrix mu_beta;  // p x q
  Matrix v_r;      // p x p, SPD
  Matrix psi;      // q x q, SPD
  double nu = 0.0;
};

struct MniwPosterior {
  Matrix mu;   // coefficient posterior mean
  Matrix v;    // row scale
  Matrix psi;  // IW scale
  double nu = 0.0;
};

/// Closed-form posterior of (beta, Sigma) for the response model
/// Y ~ MN(X beta, K, Sigma) with K = rho(S,S) + (1/alpha - 1) I.
/// Dense O(n^3); requires complete responses and n <= 5000.
MniwPosterior response_posterior(const LocationSet& locs, const Matrix& y, const Matrix& x,
                                 const ConjugateConfig& config);

/// Closed-form posterior over gamma = [beta; omega] for the latent model.
/// Evaluates both the block formulas and the augmented-system normal
/// equations and insists they agree before returning.
MniwPosterior latent_posterior(const LocationSet& locs, const Matrix& y, const Matrix& x,
                               const ConjugateConfig& config);

/// lambda_min{ X(n)' K(n)^{-1} X(n) } over nested subset sizes; the
/// sequence is nondecreasing, and divergence is the posterior-consistency
/// certificate for both conjugate models.
Vector consistency_diagnostic(const LocationSet& locs, const Matrix& x, const Kernel& kernel,
                              double alpha, const std::vector<int>& sizes);

}  // namespace blmc
