#pragma once

#include <vector>

#include "blmc/geometry.hpp"
#include "blmc/kernel.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// Sparse factorization of one spatial factor's precision. Row i of the
/// strictly lower matrix A holds the kriging weights of location i onto
/// its neighbor set; diag holds the conditional variances, so the factor
/// precision is (I - A)' D^{-1} (I - A).
struct NNGPFactor {
  std::vector<int> row_ptr;     // size n + 1
  std::vector<int> col_idx;     // neighbor model indices per row
  std::vector<double> weight;   // kriging weights aligned with col_idx
  Vector diag;                  // conditional variances, all > 0
  double decay = 0.0;           // the decay this factor was built from

  int size() const { return static_cast<int>(diag.size()); }
  int nnz() const { return static_cast<int>(col_idx.size()); }
};

/// Builds A and D from min(m, i-1)-sized dense solves per row. A singular
/// neighbor matrix is retried once with 1e-10 jitter and then reported
/// with the offending row.
NNGPFactor build_factor(const NeighborGraph& graph, const LocationSet& locs,
                        const Kernel& k, int threads = 1);

/// Gaussian log density of f under the factor's N(0, rho~) law.
double log_density(const Vector& f, const NNGPFactor& fac);

/// Applies the whitener V = D^{-1/2} (I - A) in O(n m) time.
Vector whitener_apply(const NNGPFactor& fac, const Vector& v);

/// Applies the adjoint V' = (I - A)' D^{-1/2}.
Vector whitener_apply_transpose(const NNGPFactor& fac, const Vector& v);

/// Kriging weights from reference locations onto new ones: row i of the
/// sparse matrix carries the weights over the m nearest references, and
/// diag the conditional variances (round-off clamped at zero).
struct PredictionWeights {
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> weight;
  Vector diag;
  double decay = 0.0;

  int size() const { return static_cast<int>(diag.size()); }

  /// mean_i = sum_j weight(i,j) f(col_idx(i,j))
  Vector conditional_mean(const Vector& f_ref) const;
};

PredictionWeights build_prediction_weights(const LocationSet& ref, const Matrix& new_locs,
                                           int m, const Kernel& k, int threads = 1);

}  // namespace blmc
