#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blmc/model.hpp"
#include "blmc/rng.hpp"
#include "blmc/types.hpp"

namespace blmc {

struct MisalignmentRule {
  enum class Kind { None, RandomFraction, Block };
  Kind kind = Kind::None;
  Vector fraction;             // per-response masking probability
  Vector rect_lo, rect_hi;     // block rule rectangle (per coordinate)
  std::vector<int> responses;  // block rule target responses
};

struct GenerativeSpec {
  int n = 0, q = 0, p = 0, num_factors = 0;
  Matrix beta;    // p x q
  Matrix lambda;  // K x q
  Matrix sigma;   // q x q
  Vector decay;   // K
  double domain_lo = 0.0, domain_hi = 1.0;  // square domain
  int n_holdout = 0;
  MisalignmentRule misalign;
  std::uint64_t seed = 0;
  bool allow_nngp_generation = false;  // required above the dense cap

  void check() const;
};

struct MaskedCell {
  int location;  // model-order row of the output dataset
  int response;
  double truth;
};

struct SimulationOutput {
  Dataset dataset;      // observed part, finalized
  Matrix f_true;        // rows aligned with dataset
  Matrix omega_true;    // intercept-centered latent truth, aligned with dataset
  Matrix holdout_coords, holdout_x, holdout_y, holdout_omega;
  std::vector<std::string> holdout_ids;
  std::vector<MaskedCell> masked;  // misalignment-held truths still inside S
  bool nngp_generated = false;
};

/// Draws locations uniformly on the domain, each factor from the dense GP
/// (NNGP fallback with m = 40 above n = 5000 when allowed), covariates
/// with a leading intercept, responses from the coregionalization model;
/// withholds the holdout locations entirely and applies the misalignment
/// rule. Truths are retained for latent and predictive scoring.
SimulationOutput generate(const GenerativeSpec& spec, Rng& rng);

/// The two reference designs used throughout the experiments: "sim1"
/// (q=2, p=2, K=2, n=1200) and "sim2" (q=10, p=3, K=50, n=1200, diagonal
/// Sigma), both with 200 holdout locations.
GenerativeSpec builtin_fixture(const std::string& name);

/// Masks responses in place per the rule; locations losing every response
/// are dropped (kept_rows reports the surviving input rows). Masked-cell
/// truths are returned for scoring.
struct MisalignmentResult {
  std::vector<MaskedCell> masked;
  std::vector<int> kept_rows;
};

MisalignmentResult apply_misalignment(Dataset& data, const MisalignmentRule& rule, Rng& rng);

}  // namespace blmc
