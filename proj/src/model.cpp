#include "blmc/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>

#include "blmc/special.hpp"

namespace blmc {

void Dataset::finalize() {
  const int nn = n(), qq = q();
  obs_idx.assign(static_cast<std::size_t>(nn), {});
  misaligned.clear();
  missing_cells.clear();
  n_per_response.assign(static_cast<std::size_t>(qq), 0);
  total_observed = 0;
  for (int i = 0; i < nn; ++i) {
    bool any_missing = false;
    for (int j = 0; j < qq; ++j) {
      if (observed(i, j)) {
        obs_idx[static_cast<std::size_t>(i)].push_back(j);
        ++n_per_response[static_cast<std::size_t>(j)];
        ++total_observed;
      } else {
        any_missing = true;
        missing_cells.emplace_back(i, j);
      }
    }
    if (any_missing) misaligned.push_back(i);
  }
}

bool DecayPrior::in_support(double phi) const {
  if (kind == Kind::Uniform) return phi >= lo && phi <= hi;
  return phi > 0.0;
}

double DecayPrior::log_density(double phi) const {
  if (!in_support(phi)) return -std::numeric_limits<double>::infinity();
  if (kind == Kind::Uniform) return -std::log(hi - lo);
  return (shape - 1.0) * std::log(phi) - phi / scale - shape * std::log(scale) -
         std::lgamma(shape);
}

double DecayPrior::median() const {
  if (kind == Kind::Uniform) return 0.5 * (lo + hi);
  return gamma_quantile(0.5, shape, scale);
}

Priors default_priors(int p, int q, int k, SigmaMode mode) {
  Priors pr;
  pr.beta.flat = true;
  pr.beta.mu = Matrix::Zero(p, q);
  pr.beta.v = Matrix::Identity(p, p) * 100.0;
  pr.lambda.mu = Matrix::Zero(k, q);
  pr.lambda.v = Matrix::Identity(k, k) * 25.0;
  if (mode == SigmaMode::Full) {
    pr.sigma.psi = Matrix::Identity(q, q);
    pr.sigma.nu = q + 1.0;
  } else {
    pr.sigma.a = 2.0;
    pr.sigma.b = Vector::Ones(q);
  }
  DecayPrior d;
  d.kind = DecayPrior::Kind::Uniform;
  d.lo = 2.12;
  d.hi = 212.0;
  pr.decay.assign(static_cast<std::size_t>(k), d);
  return pr;
}

namespace {

bool spd_check(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

void err(std::vector<Diagnostic>& out, const std::string& msg) {
  out.push_back({Diagnostic::Severity::Error, msg});
}

void warn(std::vector<Diagnostic>& out, const std::string& msg) {
  out.push_back({Diagnostic::Severity::Warning, msg});
}

}  // namespace

std::vector<Diagnostic> validate(const Dataset& data, const Priors& priors,
                                 const ModelConfig& config) {
  std::vector<Diagnostic> out;
  const int n = data.n(), q = data.q(), p = data.p();

  if (n == 0) err(out, "dataset has no locations");
  if (data.locs.size() != n) err(out, "location count does not match response rows");
  if (data.x.rows() != n) err(out, "design matrix rows do not match response rows");
  if (!data.x.allFinite()) err(out, "design matrix has non-finite entries");
  if (data.locs.size() > 0 && !data.locs.coords.allFinite()) {
    err(out, "coordinates have non-finite entries");
  }
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < q; ++j) {
      if (data.observed(i, j)) {
        any = true;
        if (!std::isfinite(data.y(i, j))) {
          err(out, "observed response is non-finite at row " + std::to_string(i));
        }
      }
    }
    if (!any) err(out, "location row " + std::to_string(i) + " has no observed response");
  }
  if (n > 0 && p > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(data.x);
    if (qr.rank() < p) err(out, "design matrix is numerically rank deficient");
  }

  if (config.num_factors < 1) err(out, "K must be >= 1");
  if (config.num_neighbors < 1) err(out, "m must be >= 1");
  if (config.n_keep < 1) err(out, "n_keep must be >= 1");
  if (config.n_burn < 0) err(out, "burn-in must be >= 0");
  if (config.thin < 1) err(out, "thin must be >= 1");
  if (config.f_stride < 1) err(out, "f_stride must be >= 1");
  if (config.intercept_column >= p) err(out, "intercept column out of range");
  if (config.num_factors >= q && q > 0) {
    warn(out, "K >= q: no dimension reduction; model remains computable");
  }

  if (!priors.beta.flat) {
    if (priors.beta.v.rows() != p || !spd_check(priors.beta.v)) {
      err(out, "beta prior row scale must be SPD p x p");
    }
    if (priors.beta.mu.rows() != p || priors.beta.mu.cols() != q) {
      err(out, "beta prior mean must be p x q");
    }
  }
  if (priors.lambda.v.rows() != config.num_factors || !spd_check(priors.lambda.v)) {
    err(out, "lambda prior row scale must be SPD K x K");
  }
  if (priors.lambda.mu.rows() != config.num_factors || priors.lambda.mu.cols() != q) {
    err(out, "lambda prior mean must be K x q");
  }
  if (config.sigma_mode == SigmaMode::Full) {
    if (priors.sigma.psi.rows() != q || !spd_check(priors.sigma.psi)) {
      err(out, "IW scale matrix must be SPD q x q");
    }
    if (!(priors.sigma.nu >= q + 1.0)) {
      err(out, "IW degrees of freedom too small");
    } else if (!(priors.sigma.nu > q + 1.0)) {
      warn(out, "IW degrees of freedom equal q+1: prior mean undefined, init falls back to Psi");
    }
  } else {
    if (!(priors.sigma.a > 0.0)) err(out, "IG shape must be positive");
    if (priors.sigma.b.size() != q || (q > 0 && !(priors.sigma.b.minCoeff() > 0.0))) {
      err(out, "IG rates must be positive, one per response");
    }
  }
  if (static_cast<int>(priors.decay.size()) != config.num_factors) {
    err(out, "one decay prior required per factor");
  }
  for (std::size_t k = 0; k < priors.decay.size(); ++k) {
    const DecayPrior& d = priors.decay[k];
    if (d.kind == DecayPrior::Kind::Uniform) {
      if (!(d.lo > 0.0) || !(d.lo < d.hi)) {
        err(out, "uniform decay prior needs 0 < lo < hi (factor " + std::to_string(k) + ")");
      }
    } else if (!(d.shape > 0.0) || !(d.scale > 0.0)) {
      err(out, "gamma decay prior needs positive shape and scale (factor " +
                   std::to_string(k) + ")");
    }
  }
  return out;
}

McmcState init_state(const Dataset& data, const Priors& priors, const ModelConfig& config,
                     Rng& rng) {
  const int n = data.n(), q = data.q(), k = config.num_factors;
  McmcState st;

  // Column means of the observed entries fill the missing cells for the
  // initial working response; the imputation step overwrites them in
  // sweep 1.
  st.y_work = data.y;
  for (int j = 0; j < q; ++j) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      if (data.observed(i, j)) {
        sum += data.y(i, j);
        ++cnt;
      }
    }
    double mean = cnt > 0 ? sum / cnt : 0.0;
    for (int i = 0; i < n; ++i) {
      if (!data.observed(i, j)) st.y_work(i, j) = mean;
    }
  }

  Eigen::LLT<Matrix> llt(data.x.transpose() * data.x);
  if (llt.info() != Eigen::Success) throw NumericError("init_state: degenerate design matrix");
  st.beta = llt.solve(data.x.transpose() * st.y_work);

  st.lambda.resize(k, q);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < q; ++j) st.lambda(i, j) = 0.1 * rng.normal();
  }

  if (config.sigma_mode == SigmaMode::Full) {
    double denom = priors.sigma.nu - q - 1.0;
    st.sigma = denom > 0.0 ? Matrix(priors.sigma.psi / denom) : priors.sigma.psi;
  } else {
    st.sigma = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) {
      st.sigma(j, j) = priors.sigma.a > 1.0 ? priors.sigma.b[j] / (priors.sigma.a - 1.0)
                                            : priors.sigma.b[j];
    }
  }

  st.psi.resize(k);
  for (int i = 0; i < k; ++i) st.psi[i] = priors.decay[static_cast<std::size_t>(i)].median();
  st.f = Matrix::Zero(n, k);
  st.iteration = 0;
  return st;
}

}  // namespace blmc
