#include "blmc/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace blmc {

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw ConfigError("cholesky: matrix not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw NumericError("cholesky: matrix not symmetric");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError("cholesky: matrix not positive definite");
  }
  return llt.matrixL();
}

namespace {

// Stable Givens rotation (c, s, r) with [c s; -s c]' [a; b] = [r; 0].
void sym_ortho(double a, double b, double& c, double& s, double& r) {
  if (b == 0.0) {
    c = (a >= 0.0) ? 1.0 : -1.0;
    if (a == 0.0) c = 1.0;
    s = 0.0;
    r = std::fabs(a);
  } else if (a == 0.0) {
    c = 0.0;
    s = (b >= 0.0) ? 1.0 : -1.0;
    r = std::fabs(b);
  } else if (std::fabs(b) > std::fabs(a)) {
    double tau = a / b;
    s = ((b >= 0.0) ? 1.0 : -1.0) / std::sqrt(1.0 + tau * tau);
    c = s * tau;
    r = b / s;
  } else {
    double tau = b / a;
    c = ((a >= 0.0) ? 1.0 : -1.0) / std::sqrt(1.0 + tau * tau);
    s = c * tau;
    r = a / c;
  }
}

const char* lsmr_reason(int istop) {
  switch (istop) {
    case 0: return "zero right-hand side; x = 0 is exact";
    case 1: return "residual small: Ax = b within atol/btol";
    case 2: return "normal residual small: least-squares solution within atol";
    case 3: return "condition estimate exceeded conlim";
    case 4: return "Ax = b to machine precision";
    case 5: return "least-squares solution to machine precision";
    case 6: return "condition estimate too large for machine precision";
    case 7: return "iteration limit reached";
    default: return "unknown";
  }
}

}  // namespace

LsmrResult lsmr_solve(const LinearOperator& op, const Vector& rhs, const LsmrOptions& opts) {
  const int m = op.rows();
  const int n = op.cols();
  if (rhs.size() != m) throw ConfigError("lsmr_solve: rhs length != operator rows");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 4 * n;

  LsmrResult res;
  res.x = Vector::Zero(n);

  Vector u = rhs;
  double normb = u.norm();
  double beta = normb;
  Vector v = Vector::Zero(n);
  double alpha = 0.0;
  if (beta > 0.0) {
    u /= beta;
    op.apply_transpose(u, v);
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;
  }

  double zetabar = alpha * beta;
  if (zetabar == 0.0) {
    // rhs orthogonal to the range (or zero); x = 0 is the solution.
    res.istop = 0;
    res.converged = true;
    res.residual_norm = normb;
    res.normal_residual_norm = 0.0;
    res.reason = lsmr_reason(0);
    return res;
  }

  double alphabar = alpha, rho = 1.0, rhobar = 1.0, cbar = 1.0, sbar = 0.0;
  Vector h = v;
  Vector hbar = Vector::Zero(n);
  Vector tmp_m(m), tmp_n(n);

  double betadd = beta, betad = 0.0, rhodold = 1.0, tautildeold = 0.0;
  double thetatilde = 0.0, zeta = 0.0, d = 0.0;
  double norma2 = alpha * alpha;
  double maxrbar = 0.0, minrbar = 1e100;
  double normr = beta, normar = alpha * beta, norma = std::sqrt(norma2), condA = 1.0;
  const double ctol = opts.conlim > 0.0 ? 1.0 / opts.conlim : 0.0;
  int istop = 0, itn = 0;

  while (itn < max_iter) {
    ++itn;

    op.apply(v, tmp_m);
    u = tmp_m - alpha * u;
    beta = u.norm();
    if (beta > 0.0) {
      u /= beta;
      op.apply_transpose(u, tmp_n);
      v = tmp_n - beta * v;
      alpha = v.norm();
      if (alpha > 0.0) v /= alpha;
    }

    double chat, shat, alphahat;
    sym_ortho(alphabar, 0.0, chat, shat, alphahat);

    double rhoold = rho, c, s;
    sym_ortho(alphahat, beta, c, s, rho);
    double thetanew = s * alpha;
    alphabar = c * alpha;

    double rhobarold = rhobar, zetaold = zeta;
    double thetabar = sbar * rho;
    double rhotemp = cbar * rho;
    sym_ortho(cbar * rho, thetanew, cbar, sbar, rhobar);
    zeta = cbar * zetabar;
    zetabar = -sbar * zetabar;

    hbar = h - (thetabar * rho / (rhoold * rhobarold)) * hbar;
    res.x += (zeta / (rho * rhobar)) * hbar;
    h = v - (thetanew / rho) * h;

    double betaacute = chat * betadd;
    double betacheck = -shat * betadd;
    double betahat = c * betaacute;
    betadd = -s * betaacute;

    double thetatildeold = thetatilde, ctildeold, stildeold, rhotildeold;
    sym_ortho(rhodold, thetabar, ctildeold, stildeold, rhotildeold);
    thetatilde = stildeold * rhobar;
    rhodold = ctildeold * rhobar;
    betad = -stildeold * betad + ctildeold * betahat;

    tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
    double taud = (zeta - thetatilde * tautildeold) / rhodold;
    d += betacheck * betacheck;
    normr = std::sqrt(d + (betad - taud) * (betad - taud) + betadd * betadd);

    norma2 += beta * beta;
    norma = std::sqrt(norma2);
    norma2 += alpha * alpha;
    maxrbar = std::max(maxrbar, rhobarold);
    if (itn > 1) minrbar = std::min(minrbar, rhobarold);
    condA = std::max(maxrbar, rhotemp) / std::min(minrbar, rhotemp);

    normar = std::fabs(zetabar);
    double normx = res.x.norm();
    double test1 = normr / normb;
    double test2 = (norma > 0.0 && normr > 0.0)
                       ? normar / (norma * normr)
                       : std::numeric_limits<double>::infinity();
    double test3 = 1.0 / condA;
    double t1 = test1 / (1.0 + norma * normx / normb);
    double rtol = opts.btol + opts.atol * norma * normx / normb;

    if (itn >= max_iter) istop = 7;
    if (1.0 + test3 <= 1.0) istop = 6;
    if (1.0 + test2 <= 1.0) istop = 5;
    if (1.0 + t1 <= 1.0) istop = 4;
    if (test3 <= ctol) istop = 3;
    if (test2 <= opts.atol) istop = 2;
    if (test1 <= rtol) istop = 1;
    if (istop > 0) break;
  }

  res.iterations = itn;
  res.istop = istop;
  res.converged = istop >= 1 && istop <= 6;
  res.residual_norm = normr;
  res.normal_residual_norm = normar;
  res.reason = lsmr_reason(istop);
  return res;
}

Vector woodbury_apply(const std::vector<Matrix>& rho, const Matrix& lambda,
                      const Matrix& sigma, const std::vector<std::vector<int>>& observed,
                      const Vector& u) {
  const int k_factors = static_cast<int>(rho.size());
  if (k_factors == 0) throw ConfigError("woodbury_apply: no factors");
  const int n = static_cast<int>(rho[0].rows());
  const int q = static_cast<int>(sigma.rows());
  if (lambda.rows() != k_factors || lambda.cols() != q) {
    throw ConfigError("woodbury_apply: lambda dimensions inconsistent");
  }
  if (static_cast<int>(observed.size()) != n) {
    throw ConfigError("woodbury_apply: observed index list size != n");
  }
  if (u.size() != static_cast<long>(k_factors) * n) {
    throw ConfigError("woodbury_apply: input length != K n");
  }

  // Observed-row bookkeeping: data rows are location-major.
  std::vector<int> offset(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) {
    offset[static_cast<std::size_t>(i) + 1] =
        offset[static_cast<std::size_t>(i)] +
        static_cast<int>(observed[static_cast<std::size_t>(i)].size());
  }
  const int n_obs = offset[static_cast<std::size_t>(n)];

  // w = block-diag(rho_k) u
  Vector w(static_cast<long>(k_factors) * n);
  for (int k = 0; k < k_factors; ++k) {
    w.segment(static_cast<long>(k) * n, n).noalias() =
        rho[static_cast<std::size_t>(k)] * u.segment(static_cast<long>(k) * n, n);
  }

  // t = F' w with F = (Lambda (x) I_n) P': observed entries of W Lambda.
  Vector t(n_obs);
  for (int i = 0; i < n; ++i) {
    const auto& os = observed[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < os.size(); ++a) {
      double s = 0.0;
      for (int k = 0; k < k_factors; ++k) {
        s += lambda(k, os[a]) * w[static_cast<long>(k) * n + i];
      }
      t[offset[static_cast<std::size_t>(i)] + static_cast<int>(a)] = s;
    }
  }

  // G = D_Sigma_o + P {sum_k lambda_ia lambda_jb rho_k} P'
  Matrix g = Matrix::Zero(n_obs, n_obs);
  for (int i = 0; i < n; ++i) {
    const auto& osi = observed[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const auto& osj = observed[static_cast<std::size_t>(j)];
      for (std::size_t a = 0; a < osi.size(); ++a) {
        for (std::size_t b = 0; b < osj.size(); ++b) {
          double s = 0.0;
          for (int k = 0; k < k_factors; ++k) {
            s += lambda(k, osi[a]) * lambda(k, osj[b]) * rho[static_cast<std::size_t>(k)](i, j);
          }
          g(offset[static_cast<std::size_t>(i)] + static_cast<int>(a),
            offset[static_cast<std::size_t>(j)] + static_cast<int>(b)) += s;
        }
      }
    }
    for (std::size_t a = 0; a < osi.size(); ++a) {
      for (std::size_t b = 0; b < osi.size(); ++b) {
        g(offset[static_cast<std::size_t>(i)] + static_cast<int>(a),
          offset[static_cast<std::size_t>(i)] + static_cast<int>(b)) +=
            sigma(osi[a], osi[b]);
      }
    }
  }
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw NumericError("woodbury_apply: singular G");
  Vector z = llt.solve(t);

  // back out: result = w - block-diag(rho_k) F z
  Matrix scattered = Matrix::Zero(n, q);
  for (int i = 0; i < n; ++i) {
    const auto& os = observed[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < os.size(); ++a) {
      scattered(i, os[a]) = z[offset[static_cast<std::size_t>(i)] + static_cast<int>(a)];
    }
  }
  Matrix fz = scattered * lambda.transpose();  // n x K
  Vector out(static_cast<long>(k_factors) * n);
  for (int k = 0; k < k_factors; ++k) {
    out.segment(static_cast<long>(k) * n, n).noalias() =
        w.segment(static_cast<long>(k) * n, n) -
        rho[static_cast<std::size_t>(k)] * fz.col(k);
  }
  return out;
}

Matrix sample_standard_normal(int rows, int cols, Rng& rng) {
  Matrix z(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) z(i, j) = rng.normal();
  }
  return z;
}

Matrix sample_matrix_normal(const Matrix& mean, const Matrix& l_row, const Matrix& l_col,
                            Rng& rng) {
  if (l_row.rows() != mean.rows() || l_col.rows() != mean.cols()) {
    throw ConfigError("sample_matrix_normal: scale dimensions inconsistent with mean");
  }
  Matrix z = sample_standard_normal(static_cast<int>(mean.rows()),
                                    static_cast<int>(mean.cols()), rng);
  return mean + l_row * z * l_col.transpose();
}

Matrix sample_inverse_wishart(const Matrix& psi, double nu, Rng& rng) {
  const int q = static_cast<int>(psi.rows());
  if (psi.cols() != q) throw ConfigError("sample_inverse_wishart: psi not square");
  if (!(nu > q - 1)) throw ConfigError("sample_inverse_wishart: nu too small");
  Matrix l_psi = cholesky(psi);
  // Any square root M with M M' = psi^{-1} works for the Bartlett draw;
  // (l_psi')^{-1} is one.
  Matrix root = l_psi.transpose()
                    .triangularView<Eigen::Upper>()
                    .solve(Matrix::Identity(q, q));
  Matrix a = Matrix::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(nu - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Matrix t = root * a;  // W = t t' ~ Wishart(psi^{-1}, nu)
  Eigen::LLT<Matrix> llt;
  Matrix w = t * t.transpose();
  llt.compute(w);
  if (llt.info() != Eigen::Success) {
    throw NumericError("sample_inverse_wishart: degenerate draw");
  }
  return llt.solve(Matrix::Identity(q, q));
}

double sample_inverse_gamma(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ConfigError("sample_inverse_gamma: parameters must be positive");
  }
  return rng.inverse_gamma(a, b);
}

}  // namespace blmc
