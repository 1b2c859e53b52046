#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "blmc/linalg.hpp"
#include "blmc/model.hpp"
#include "blmc/nngp.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// The implicit stacked design for the factor block: data rows are the
/// per-location whitened loadings restricted to observed responses, prior
/// rows the per-factor NNGP whiteners. Never materialized.
class FactorBlockOperator final : public LinearOperator {
 public:
  FactorBlockOperator(const Dataset& data, const Matrix& lambda, const Matrix& sigma,
                      const std::vector<NNGPFactor>& factors, int threads = 1);

  int rows() const override { return total_obs_ + k_ * n_; }
  int cols() const override { return k_ * n_; }
  void apply(const Vector& x, Vector& y) const override;
  void apply_transpose(const Vector& y, Vector& x) const override;

  /// The weighted residual right-hand side (data block; prior rows zero).
  Vector data_rhs(const Matrix& beta) const;

  int data_rows() const { return total_obs_; }

 private:
  const Dataset& data_;
  const std::vector<NNGPFactor>& factors_;
  int n_, q_, k_, total_obs_, threads_;
  std::vector<int> row_off_;      // data-row offset per location
  std::vector<int> pattern_of_;   // observation pattern id per location
  std::vector<Matrix> chol_os_;   // per pattern: lower Cholesky of Sigma_os
  std::vector<Matrix> loading_;   // per pattern: L^{-1} Lambda'[os, :]  (h x K)
};

/// Componentwise adaptive proposal for the decays on the log scale:
/// running mean/variance of each log(psi_k) chain, adapted during burn-in
/// only and frozen afterwards.
class AdaptiveProposal {
 public:
  explicit AdaptiveProposal(int k)
      : count_(static_cast<std::size_t>(k), 0),
        mean_(static_cast<std::size_t>(k), 0.0),
        m2_(static_cast<std::size_t>(k), 0.0) {}

  void observe(int k, double log_psi);
  double variance(int k) const;

  bool adapting = true;

 private:
  std::vector<long> count_;
  std::vector<double> mean_, m2_;
};

/// Thinned retained draws of every block plus streamed moments of the
/// intercept-centered latent process omega = F Lambda.
struct PosteriorSamples {
  int n = 0, q = 0, p = 0, num_factors = 0;
  std::vector<Matrix> beta;    // p x q per draw
  std::vector<Matrix> lambda;  // K x q per draw
  std::vector<Matrix> sigma;   // q x q per draw
  std::vector<Vector> psi;     // K per draw
  std::vector<Vector> imputed;              // missing-cell draws
  std::vector<std::pair<int, Matrix>> f_draws;  // (kept index, n x K)
  Matrix omega_mean;      // n x q running mean of centered omega
  Matrix omega_m2;        // running sum of squared deviations
  long omega_count = 0;
  Matrix omega_cov_mean;  // running mean of the per-draw finite-sample covariance
  Vector accept_rate;     // per decay, post burn-in
  std::vector<std::pair<int, int>> missing_cells;
  Matrix ref_coords;      // reference locations, model order
  std::vector<std::string> ids;
  ModelConfig config;

  int n_draws() const { return static_cast<int>(beta.size()); }
  Matrix omega_var() const;
  Vector beta_chain(int r, int c) const;
  Vector lambda_chain(int r, int c) const;
  Vector sigma_chain(int r, int c) const;
  Vector psi_chain(int k) const;
};

/// One draw from the factor-block full conditional: perturb the stacked
/// right-hand side with standard normal noise over the full row count and
/// least-squares solve. Returns the new n x K factor matrix.
Matrix sample_factors(const McmcState& state, const Dataset& data,
                      const std::vector<NNGPFactor>& factors, const ModelConfig& config,
                      Rng& rng);

/// Conditional mean and covariance of the missing block at one location
/// given the current state (Schur complement over the observed entries).
std::pair<Vector, Matrix> imputation_moments(const McmcState& state, const Dataset& data,
                                             int location);

/// Draws every missing response block from its Gaussian conditional given
/// the current state; writes into state.y_work.
void impute_missing(McmcState& state, const Dataset& data, Rng& rng);

/// The MNIW full-conditional pieces for (gamma, Sigma): mu*, V*^{-1},
/// Psi* and nu* from the augmented system (flat beta priors contribute no
/// rows).
struct CoefficientPosterior {
  Matrix mu;       // (p + K) x q
  Matrix v_inv;    // (p + K) x (p + K)
  Matrix psi;      // q x q (Psi + S*)
  double nu;       // nu + n
  Matrix residual_ss;  // S* alone, for the diagonal-Sigma rates
};

CoefficientPosterior coefficient_posterior(const McmcState& state, const Dataset& data,
                                           const Priors& priors);

/// Conjugate MNIW (or IG for diagonal Sigma) block update of
/// (beta, lambda, sigma) given complete responses and current factors.
void update_coefficients(McmcState& state, const Dataset& data, const Priors& priors,
                         SigmaMode mode, Rng& rng);

/// Metropolis random-walk update of each decay on the log scale with the
/// adaptive mixture proposal; accepted moves rebuild that factor.
/// Returns per-factor accept flags.
std::vector<std::uint8_t> update_decays(McmcState& state, std::vector<NNGPFactor>& factors,
                                        const Priors& priors, AdaptiveProposal& proposal,
                                        const NeighborGraph& graph, const LocationSet& locs,
                                        const ModelConfig& config, Rng& rng);

/// Full block-update MCMC: factors, imputation, coefficients, decays per
/// sweep; burn-in discarded, retained draws thinned, adaptation frozen
/// after burn-in.
PosteriorSamples run_mcmc(const Dataset& data, const Priors& priors,
                          const ModelConfig& config, Rng& rng);

}  // namespace blmc
