#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "blmc/geometry.hpp"
#include "blmc/rng.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// Multivariate spatial data with per-entry observation flags. Rows are in
/// model order. The observed-response selector is kept implicitly as the
/// per-location index lists; it is never materialized as a matrix.
struct Dataset {
  LocationSet locs;
  Matrix y;                          // n x q; missing cells hold NaN
  std::vector<std::uint8_t> obs;     // n*q row-major flags
  Matrix x;                          // n x p
  std::vector<std::string> ids;      // one id per model-order row

  // derived by finalize():
  std::vector<std::vector<int>> obs_idx;     // observed response indices per location
  std::vector<int> misaligned;               // locations with >= 1 missing entry
  std::vector<int> n_per_response;           // n_i
  std::vector<std::pair<int, int>> missing_cells;  // (location, response), fixed order
  int total_observed = 0;

  int n() const { return static_cast<int>(y.rows()); }
  int q() const { return static_cast<int>(y.cols()); }
  int p() const { return static_cast<int>(x.cols()); }
  bool observed(int i, int j) const {
    return obs[static_cast<std::size_t>(i) * static_cast<std::size_t>(y.cols()) +
               static_cast<std::size_t>(j)] != 0;
  }
  void set_observed(int i, int j, bool v) {
    obs[static_cast<std::size_t>(i) * static_cast<std::size_t>(y.cols()) +
        static_cast<std::size_t>(j)] = v ? 1 : 0;
  }
  /// Rebuilds the derived index structures from the flags.
  void finalize();
};

struct BetaPrior {
  bool flat = true;
  Matrix mu;  // p x q
  Matrix v;   // p x p, SPD
};

struct LambdaPrior {
  Matrix mu;  // K x q
  Matrix v;   // K x K row scale, SPD
};

enum class SigmaMode { Full, Diagonal };

struct SigmaPrior {
  // Full mode: IW(psi, nu). Diagonal mode: independent IG(a, b[i]).
  Matrix psi;
  double nu = 0.0;
  double a = 0.0;
  Vector b;
};

struct DecayPrior {
  enum class Kind { Uniform, Gamma };
  Kind kind = Kind::Uniform;
  double lo = 0.0, hi = 0.0;        // Uniform support
  double shape = 0.0, scale = 0.0;  // Gamma parameters

  bool in_support(double phi) const;
  double log_density(double phi) const;  // -inf outside support
  double median() const;
};

struct Priors {
  BetaPrior beta;
  LambdaPrior lambda;
  SigmaPrior sigma;
  std::vector<DecayPrior> decay;  // one per factor
};

/// Vague defaults mirroring common practice: flat beta, zero-mean Lambda
/// with 25 I row scale, IW(I, q+1) or IG(2, 1), Uniform(2.12, 212) decays.
Priors default_priors(int p, int q, int k, SigmaMode mode);

struct ModelConfig {
  int num_factors = 1;        // K
  int num_neighbors = 10;     // m
  int n_burn = 1000;
  int n_keep = 1000;
  int thin = 1;
  SigmaMode sigma_mode = SigmaMode::Full;
  std::uint64_t seed = 0;
  int intercept_column = 0;   // -1 when no intercept; used for centered summaries
  int f_stride = 1;           // retain every f_stride-th kept draw of F
  int threads = 1;
  double lsmr_atol = 1e-8;
  double lsmr_btol = 1e-8;
  int lsmr_max_iter = 0;      // 0 -> 4 * unknowns
};

/// One Gibbs sweep's mutable state.
struct McmcState {
  Matrix beta;    // p x q
  Matrix lambda;  // K x q
  Matrix sigma;   // q x q (kept diagonal in Diagonal mode)
  Matrix f;       // n x K
  Vector psi;     // K decays
  Matrix y_work;  // y with current imputations in missing cells
  int iteration = 0;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string message;
};

/// Collects every invariant violation; fitting may proceed iff no
/// error-severity entry is present. Pure.
std::vector<Diagnostic> validate(const Dataset& data, const Priors& priors,
                                 const ModelConfig& config);

inline bool validation_clean(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::Error) return false;
  }
  return true;
}

McmcState init_state(const Dataset& data, const Priors& priors, const ModelConfig& config,
                     Rng& rng);

}  // namespace blmc
