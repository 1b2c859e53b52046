#pragma once

#include <string>
#include <vector>

#include "blmc/rng.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// Abstract linear map with a true adjoint. apply_transpose must satisfy
/// <A v, w> = <v, A' w> up to round-off on random probes.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual void apply(const Vector& x, Vector& y) const = 0;            // y = A x
  virtual void apply_transpose(const Vector& y, Vector& x) const = 0;  // x = A' y
};

/// Lower Cholesky factor of a symmetric positive definite matrix.
/// Fails loudly on non-SPD input; no jitter at this layer.
Matrix cholesky(const Matrix& m);

struct LsmrOptions {
  double atol = 1e-8;
  double btol = 1e-8;
  double conlim = 1e8;
  int max_iter = 0;  // 0 -> 4 * number of unknowns
};

struct LsmrResult {
  Vector x;
  int iterations = 0;
  int istop = 0;
  bool converged = false;
  double residual_norm = 0.0;         // |b - A x|
  double normal_residual_norm = 0.0;  // |A'(b - A x)|
  std::string reason;
};

/// Iterative least-squares solve min |A x - b| (Fong-Saunders recurrences).
/// Deterministic given inputs; a hit on max_iter returns the best iterate
/// flagged non-converged.
LsmrResult lsmr_solve(const LinearOperator& op, const Vector& rhs,
                      const LsmrOptions& opts = {});

/// Applies (X~' X~)^{-1} u through the Woodbury identity with the exact
/// dense factor correlations rho_k: block-diag(rho_k) minus the data
/// correction through G = D_Sigma_o + P {sum_k lambda_ik lambda_jk rho_k} P'.
/// Used as the exact oracle path for small n and as an optional solver.
Vector woodbury_apply(const std::vector<Matrix>& rho, const Matrix& lambda,
                      const Matrix& sigma, const std::vector<std::vector<int>>& observed,
                      const Vector& u);

/// rows x cols of iid N(0,1), filled row-major.
Matrix sample_standard_normal(int rows, int cols, Rng& rng);

/// mean + L_row Z L_col' with Z iid standard normal.
Matrix sample_matrix_normal(const Matrix& mean, const Matrix& l_row, const Matrix& l_col,
                            Rng& rng);

/// Inverse-Wishart(psi, nu) through a Bartlett draw of Wishart(psi^{-1}, nu).
Matrix sample_inverse_wishart(const Matrix& psi, double nu, Rng& rng);

double sample_inverse_gamma(double a, double b, Rng& rng);

}  // namespace blmc
