#include "blmc/sampler.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "blmc/parallel.hpp"

namespace blmc {

FactorBlockOperator::FactorBlockOperator(const Dataset& data, const Matrix& lambda,
                                         const Matrix& sigma,
                                         const std::vector<NNGPFactor>& factors, int threads)
    : data_(data),
      factors_(factors),
      n_(data.n()),
      q_(data.q()),
      k_(static_cast<int>(factors.size())),
      total_obs_(data.total_observed),
      threads_(threads) {
  if (lambda.rows() != k_ || lambda.cols() != q_) {
    throw ConfigError("factor operator: lambda must be K x q");
  }
  row_off_.assign(static_cast<std::size_t>(n_) + 1, 0);
  pattern_of_.assign(static_cast<std::size_t>(n_), -1);
  std::map<std::vector<int>, int> seen;
  for (int i = 0; i < n_; ++i) {
    const auto& os = data.obs_idx[static_cast<std::size_t>(i)];
    row_off_[static_cast<std::size_t>(i) + 1] =
        row_off_[static_cast<std::size_t>(i)] + static_cast<int>(os.size());
    auto it = seen.find(os);
    if (it == seen.end()) {
      it = seen.emplace(os, static_cast<int>(chol_os_.size())).first;
      const int h = static_cast<int>(os.size());
      Matrix sig_os(h, h);
      for (int a = 0; a < h; ++a) {
        for (int b = 0; b < h; ++b) sig_os(a, b) = sigma(os[a], os[b]);
      }
      Eigen::LLT<Matrix> llt(sig_os);
      if (llt.info() != Eigen::Success) {
        throw NumericError("factor operator: observed-submatrix of Sigma not SPD at row " +
                           std::to_string(i));
      }
      Matrix lam_os(h, k_);
      for (int a = 0; a < h; ++a) {
        for (int kk = 0; kk < k_; ++kk) lam_os(a, kk) = lambda(kk, os[a]);
      }
      chol_os_.push_back(llt.matrixL());
      loading_.push_back(chol_os_.back().triangularView<Eigen::Lower>().solve(lam_os));
    }
    pattern_of_[static_cast<std::size_t>(i)] = it->second;
  }
}

void FactorBlockOperator::apply(const Vector& x, Vector& y) const {
  y.resize(rows());
  parallel_for(n_, threads_, [&](int i) {
    const Matrix& w = loading_[static_cast<std::size_t>(pattern_of_[static_cast<std::size_t>(i)])];
    const int h = static_cast<int>(w.rows());
    for (int a = 0; a < h; ++a) {
      double s = 0.0;
      for (int kk = 0; kk < k_; ++kk) s += w(a, kk) * x[static_cast<long>(kk) * n_ + i];
      y[row_off_[static_cast<std::size_t>(i)] + a] = s;
    }
  });
  parallel_for(k_, threads_, [&](int kk) {
    y.segment(total_obs_ + static_cast<long>(kk) * n_, n_) =
        whitener_apply(factors_[static_cast<std::size_t>(kk)],
                       x.segment(static_cast<long>(kk) * n_, n_));
  });
}

void FactorBlockOperator::apply_transpose(const Vector& y, Vector& x) const {
  x.resize(cols());
  parallel_for(n_, threads_, [&](int i) {
    const Matrix& w = loading_[static_cast<std::size_t>(pattern_of_[static_cast<std::size_t>(i)])];
    const int h = static_cast<int>(w.rows());
    for (int kk = 0; kk < k_; ++kk) {
      double s = 0.0;
      for (int a = 0; a < h; ++a) s += w(a, kk) * y[row_off_[static_cast<std::size_t>(i)] + a];
      x[static_cast<long>(kk) * n_ + i] = s;
    }
  });
  parallel_for(k_, threads_, [&](int kk) {
    x.segment(static_cast<long>(kk) * n_, n_) +=
        whitener_apply_transpose(factors_[static_cast<std::size_t>(kk)],
                                 y.segment(total_obs_ + static_cast<long>(kk) * n_, n_));
  });
}

Vector FactorBlockOperator::data_rhs(const Matrix& beta) const {
  Vector rhs = Vector::Zero(rows());
  parallel_for(n_, threads_, [&](int i) {
    const auto& os = data_.obs_idx[static_cast<std::size_t>(i)];
    const int h = static_cast<int>(os.size());
    Vector r(h);
    for (int a = 0; a < h; ++a) {
      r[a] = data_.y(i, os[a]) - data_.x.row(i).dot(beta.col(os[a]));
    }
    const Matrix& l =
        chol_os_[static_cast<std::size_t>(pattern_of_[static_cast<std::size_t>(i)])];
    l.triangularView<Eigen::Lower>().solveInPlace(r);
    rhs.segment(row_off_[static_cast<std::size_t>(i)], h) = r;
  });
  return rhs;
}

Matrix sample_factors(const McmcState& state, const Dataset& data,
                      const std::vector<NNGPFactor>& factors, const ModelConfig& config,
                      Rng& rng) {
  const int n = data.n();
  const int k = static_cast<int>(factors.size());
  FactorBlockOperator op(data, state.lambda, state.sigma, factors, config.threads);
  Vector rhs = op.data_rhs(state.beta);
  // The perturbation spans the full stacked row count (data plus prior
  // rows), which is what makes the solve an exact conditional draw.
  for (int r = 0; r < op.rows(); ++r) rhs[r] += rng.normal();
  LsmrOptions opts;
  opts.atol = config.lsmr_atol;
  opts.btol = config.lsmr_btol;
  opts.max_iter = config.lsmr_max_iter;
  LsmrResult res = lsmr_solve(op, rhs, opts);
  if (!res.converged) {
    throw NumericError("factor block solve failed at sweep " +
                       std::to_string(state.iteration) + ": " + res.reason);
  }
  Matrix f(n, k);
  for (int kk = 0; kk < k; ++kk) f.col(kk) = res.x.segment(static_cast<long>(kk) * n, n);
  return f;
}

std::pair<Vector, Matrix> imputation_moments(const McmcState& state, const Dataset& data,
                                             int location) {
  const int i = location;
  const int q = data.q();
  const auto& os = data.obs_idx[static_cast<std::size_t>(i)];
  std::vector<int> ms;
  ms.reserve(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) {
    if (!data.observed(i, j)) ms.push_back(j);
  }
  const int ho = static_cast<int>(os.size());
  const int hm = static_cast<int>(ms.size());
  if (hm == 0) return {Vector(), Matrix()};
  Vector mu = state.beta.transpose() * data.x.row(i).transpose() +
              state.lambda.transpose() * state.f.row(i).transpose();

  Matrix sig_oo(ho, ho), sig_mo(hm, ho), sig_mm(hm, hm);
  for (int a = 0; a < ho; ++a) {
    for (int b = 0; b < ho; ++b) sig_oo(a, b) = state.sigma(os[a], os[b]);
  }
  for (int a = 0; a < hm; ++a) {
    for (int b = 0; b < ho; ++b) sig_mo(a, b) = state.sigma(ms[a], os[b]);
    for (int b = 0; b < hm; ++b) sig_mm(a, b) = state.sigma(ms[a], ms[b]);
  }
  Eigen::LLT<Matrix> llt(sig_oo);
  if (llt.info() != Eigen::Success) {
    throw NumericError("impute_missing: singular observed submatrix of Sigma at row " +
                       std::to_string(i));
  }
  Vector resid(ho);
  for (int a = 0; a < ho; ++a) resid[a] = data.y(i, os[a]) - mu[os[a]];
  Vector gain = llt.solve(resid);
  Matrix cross = llt.solve(sig_mo.transpose());  // ho x hm
  Vector cond_mean(hm);
  for (int a = 0; a < hm; ++a) cond_mean[a] = mu[ms[a]] + sig_mo.row(a).dot(gain);
  Matrix cond_cov = sig_mm - sig_mo * cross;
  return {std::move(cond_mean), std::move(cond_cov)};
}

void impute_missing(McmcState& state, const Dataset& data, Rng& rng) {
  if (data.misaligned.empty()) return;
  const int q = data.q();
  for (int i : data.misaligned) {
    auto [cond_mean, cond_cov] = imputation_moments(state, data, i);
    const int hm = static_cast<int>(cond_mean.size());
    Eigen::LLT<Matrix> cllt(cond_cov);
    if (cllt.info() != Eigen::Success) {
      throw NumericError("impute_missing: conditional covariance not SPD at row " +
                         std::to_string(i));
    }
    Vector z(hm);
    for (int a = 0; a < hm; ++a) z[a] = rng.normal();
    Vector draw = cond_mean + Matrix(cllt.matrixL()) * z;
    int a = 0;
    for (int j = 0; j < q; ++j) {
      if (!data.observed(i, j)) state.y_work(i, j) = draw[a++];
    }
  }
}

CoefficientPosterior coefficient_posterior(const McmcState& state, const Dataset& data,
                                           const Priors& priors) {
  const int n = data.n(), q = data.q(), p = data.p();
  const int k = static_cast<int>(state.lambda.rows());
  const int pk = p + k;
  const int extra_beta = priors.beta.flat ? 0 : p;
  const int rows = n + extra_beta + k;

  Matrix x_star = Matrix::Zero(rows, pk);
  Matrix y_star = Matrix::Zero(rows, q);
  x_star.block(0, 0, n, p) = data.x;
  x_star.block(0, p, n, k) = state.f;
  y_star.topRows(n) = state.y_work;
  if (!priors.beta.flat) {
    Matrix l_beta_inv = cholesky(priors.beta.v)
                            .triangularView<Eigen::Lower>()
                            .solve(Matrix::Identity(p, p));
    x_star.block(n, 0, p, p) = l_beta_inv;
    y_star.block(n, 0, p, q) = l_beta_inv * priors.beta.mu;
  }
  Matrix l_lambda_inv = cholesky(priors.lambda.v)
                            .triangularView<Eigen::Lower>()
                            .solve(Matrix::Identity(k, k));
  x_star.block(n + extra_beta, p, k, k) = l_lambda_inv;
  y_star.block(n + extra_beta, 0, k, q) = l_lambda_inv * priors.lambda.mu;

  CoefficientPosterior post;
  post.v_inv = x_star.transpose() * x_star;
  Eigen::LLT<Matrix> llt(post.v_inv);
  if (llt.info() != Eigen::Success) {
    throw NumericError(
        "coefficient update: X*'X* singular (collinear design with flat prior?)");
  }
  post.mu = llt.solve(x_star.transpose() * y_star);
  Matrix resid = y_star - x_star * post.mu;
  post.residual_ss = resid.transpose() * resid;
  post.psi = (priors.sigma.psi.size() > 0 ? Matrix(priors.sigma.psi)
                                          : Matrix(Matrix::Zero(q, q))) +
             post.residual_ss;
  post.nu = priors.sigma.nu + n;
  return post;
}

void update_coefficients(McmcState& state, const Dataset& data, const Priors& priors,
                         SigmaMode mode, Rng& rng) {
  const int n = data.n(), q = data.q(), p = data.p();
  const int k = static_cast<int>(state.lambda.rows());
  CoefficientPosterior post = coefficient_posterior(state, data, priors);

  if (mode == SigmaMode::Full) {
    state.sigma = sample_inverse_wishart(post.psi, post.nu, rng);
  } else {
    state.sigma = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) {
      state.sigma(j, j) =
          sample_inverse_gamma(priors.sigma.a + 0.5 * n,
                               priors.sigma.b[j] + 0.5 * post.residual_ss(j, j), rng);
    }
  }

  // gamma = mu* + L_V^{-T} Z L_Sigma' draws MN(mu*, V*, Sigma) with
  // V*^{-1} = L_V L_V'.
  Eigen::LLT<Matrix> llt(post.v_inv);
  Matrix l_v(llt.matrixL());
  Matrix z = sample_standard_normal(p + k, q, rng);
  Matrix l_sigma = cholesky(state.sigma);
  Matrix gamma = post.mu + l_v.transpose().triangularView<Eigen::Upper>().solve(z) *
                               l_sigma.transpose();
  state.beta = gamma.topRows(p);
  state.lambda = gamma.bottomRows(k);
}

void AdaptiveProposal::observe(int k, double log_psi) {
  auto idx = static_cast<std::size_t>(k);
  ++count_[idx];
  double delta = log_psi - mean_[idx];
  mean_[idx] += delta / static_cast<double>(count_[idx]);
  m2_[idx] += delta * (log_psi - mean_[idx]);
}

double AdaptiveProposal::variance(int k) const {
  auto idx = static_cast<std::size_t>(k);
  if (count_[idx] < 10) return 0.1;  // startup scale until history accrues
  double v = m2_[idx] / static_cast<double>(count_[idx] - 1);
  return std::max(v, 1e-12);
}

std::vector<std::uint8_t> update_decays(McmcState& state, std::vector<NNGPFactor>& factors,
                                        const Priors& priors, AdaptiveProposal& proposal,
                                        const NeighborGraph& graph, const LocationSet& locs,
                                        const ModelConfig& config, Rng& rng) {
  const int k = static_cast<int>(factors.size());
  std::vector<std::uint8_t> accepted(static_cast<std::size_t>(k), 0);
  for (int kk = 0; kk < k; ++kk) {
    const DecayPrior& dp = priors.decay[static_cast<std::size_t>(kk)];
    double log_psi = std::log(state.psi[kk]);
    // Mixture proposal: 0.95 N(., 2.38^2 sigma_hat^2) + 0.05 N(., 0.01).
    double comp = rng.uniform();
    double z = rng.normal();
    double step = comp < 0.95 ? 2.38 * std::sqrt(proposal.variance(kk)) * z : 0.1 * z;
    double log_psi_new = log_psi + step;
    double psi_new = std::exp(log_psi_new);
    if (dp.in_support(psi_new)) {
      Kernel cand_kernel{KernelFamily::Exponential, psi_new};
      NNGPFactor cand = build_factor(graph, locs, cand_kernel, config.threads);
      Vector fk = state.f.col(kk);
      // Log transform contributes the +log(psi) Jacobian on both sides.
      double log_ratio = log_density(fk, cand) + dp.log_density(psi_new) + log_psi_new -
                         log_density(fk, factors[static_cast<std::size_t>(kk)]) -
                         dp.log_density(state.psi[kk]) - log_psi;
      double u = rng.uniform();
      if (std::log(std::max(u, 1e-300)) < log_ratio) {
        state.psi[kk] = psi_new;
        factors[static_cast<std::size_t>(kk)] = std::move(cand);
        accepted[static_cast<std::size_t>(kk)] = 1;
      }
    }
    if (proposal.adapting) proposal.observe(kk, std::log(state.psi[kk]));
  }
  return accepted;
}

namespace {

void record_draw(PosteriorSamples& out, const McmcState& state, const Dataset& data,
                 const ModelConfig& config, int kept_index) {
  out.beta.push_back(state.beta);
  out.lambda.push_back(state.lambda);
  out.sigma.push_back(state.sigma);
  out.psi.push_back(state.psi);
  if (!data.missing_cells.empty()) {
    Vector imp(static_cast<long>(data.missing_cells.size()));
    for (std::size_t c = 0; c < data.missing_cells.size(); ++c) {
      imp[static_cast<long>(c)] =
          state.y_work(data.missing_cells[c].first, data.missing_cells[c].second);
    }
    out.imputed.push_back(std::move(imp));
  }

  Matrix omega = state.f * state.lambda;
  // Finite-sample covariance of the latent process for this draw
  // (translation invariant, so centering does not matter here).
  Eigen::RowVectorXd col_means = omega.colwise().mean();
  Matrix centered = omega.rowwise() - col_means;
  Matrix cov = centered.transpose() * centered / static_cast<double>(data.n());

  if (config.intercept_column >= 0) {
    omega.rowwise() += state.beta.row(config.intercept_column);
  }
  ++out.omega_count;
  Matrix delta = omega - out.omega_mean;
  out.omega_mean += delta / static_cast<double>(out.omega_count);
  out.omega_m2 += delta.cwiseProduct(omega - out.omega_mean);
  out.omega_cov_mean += (cov - out.omega_cov_mean) / static_cast<double>(out.omega_count);

  if (kept_index % config.f_stride == 0) out.f_draws.emplace_back(kept_index, state.f);
}

}  // namespace

Matrix PosteriorSamples::omega_var() const {
  if (omega_count < 2) return Matrix::Zero(omega_mean.rows(), omega_mean.cols());
  return omega_m2 / static_cast<double>(omega_count - 1);
}

Vector PosteriorSamples::beta_chain(int r, int c) const {
  Vector out(n_draws());
  for (int t = 0; t < n_draws(); ++t) out[t] = beta[static_cast<std::size_t>(t)](r, c);
  return out;
}

Vector PosteriorSamples::lambda_chain(int r, int c) const {
  Vector out(n_draws());
  for (int t = 0; t < n_draws(); ++t) out[t] = lambda[static_cast<std::size_t>(t)](r, c);
  return out;
}

Vector PosteriorSamples::sigma_chain(int r, int c) const {
  Vector out(n_draws());
  for (int t = 0; t < n_draws(); ++t) out[t] = sigma[static_cast<std::size_t>(t)](r, c);
  return out;
}

Vector PosteriorSamples::psi_chain(int k) const {
  Vector out(n_draws());
  for (int t = 0; t < n_draws(); ++t) out[t] = psi[static_cast<std::size_t>(t)][k];
  return out;
}

PosteriorSamples run_mcmc(const Dataset& data, const Priors& priors,
                          const ModelConfig& config, Rng& rng) {
  auto diags = validate(data, priors, config);
  if (!validation_clean(diags)) {
    std::string msg = "validation failed:";
    for (const auto& d : diags) {
      if (d.severity == Diagnostic::Severity::Error) msg += "\n  " + d.message;
    }
    throw ConfigError(msg);
  }

  const int k = config.num_factors;
  NeighborGraph graph = build_neighbor_graph(data.locs, config.num_neighbors, config.threads);
  McmcState state = init_state(data, priors, config, rng);
  std::vector<NNGPFactor> factors;
  factors.reserve(static_cast<std::size_t>(k));
  for (int kk = 0; kk < k; ++kk) {
    factors.push_back(build_factor(graph, data.locs,
                                   Kernel{KernelFamily::Exponential, state.psi[kk]},
                                   config.threads));
  }
  AdaptiveProposal proposal(k);

  PosteriorSamples out;
  out.n = data.n();
  out.q = data.q();
  out.p = data.p();
  out.num_factors = k;
  out.missing_cells = data.missing_cells;
  out.ref_coords = data.locs.coords;
  out.ids = data.ids;
  out.config = config;
  out.omega_mean = Matrix::Zero(data.n(), data.q());
  out.omega_m2 = Matrix::Zero(data.n(), data.q());
  out.omega_cov_mean = Matrix::Zero(data.q(), data.q());
  out.beta.reserve(static_cast<std::size_t>(config.n_keep));

  std::vector<long> accept_count(static_cast<std::size_t>(k), 0);
  const long total = static_cast<long>(config.n_burn) +
                     static_cast<long>(config.n_keep) * config.thin;
  int kept = 0;
  for (long it = 0; it < total; ++it) {
    state.iteration = static_cast<int>(it);
    state.f = sample_factors(state, data, factors, config, rng);
    impute_missing(state, data, rng);
    update_coefficients(state, data, priors, config.sigma_mode, rng);
    proposal.adapting = it < config.n_burn;
    auto acc = update_decays(state, factors, priors, proposal, graph, data.locs, config, rng);
    if (it >= config.n_burn) {
      for (int kk = 0; kk < k; ++kk) accept_count[static_cast<std::size_t>(kk)] += acc[static_cast<std::size_t>(kk)];
      if ((it - config.n_burn) % config.thin == 0 && kept < config.n_keep) {
        record_draw(out, state, data, config, kept);
        ++kept;
      }
    }
  }
  const double post = static_cast<double>(total - config.n_burn);
  out.accept_rate.resize(k);
  for (int kk = 0; kk < k; ++kk) {
    out.accept_rate[kk] =
        post > 0 ? static_cast<double>(accept_count[static_cast<std::size_t>(kk)]) / post : 0.0;
  }
  return out;
}

}  // namespace blmc
