#include "blmc/simdata.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blmc/geometry.hpp"
#include "blmc/kernel.hpp"
#include "blmc/linalg.hpp"
#include "blmc/nngp.hpp"

namespace blmc {

namespace {

constexpr int kDenseGenerationCap = 5000;
constexpr int kNngpGenerationNeighbors = 40;

Matrix draw_factors(const LocationSet& locs, const Vector& decay, bool allow_nngp,
                    bool& used_nngp, Rng& rng) {
  const int n = locs.size();
  const int k = static_cast<int>(decay.size());
  Matrix f(n, k);
  if (n <= kDenseGenerationCap) {
    used_nngp = false;
    for (int kk = 0; kk < k; ++kk) {
      Matrix rho = correlation_matrix(Kernel{KernelFamily::Exponential, decay[kk]},
                                      locs.coords, locs.coords);
      Eigen::LLT<Matrix> llt(rho);
      if (llt.info() != Eigen::Success) {
        throw NumericError("generate: factor correlation not SPD (duplicate locations?)");
      }
      Vector z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      f.col(kk) = Matrix(llt.matrixL()) * z;
    }
    return f;
  }
  if (!allow_nngp) {
    throw ConfigError("generate: n exceeds the dense generation cap; enable NNGP generation");
  }
  used_nngp = true;
  NeighborGraph graph = build_neighbor_graph(locs, kNngpGenerationNeighbors);
  for (int kk = 0; kk < k; ++kk) {
    NNGPFactor fac =
        build_factor(graph, locs, Kernel{KernelFamily::Exponential, decay[kk]});
    // f = (I - A)^{-1} D^{1/2} z by forward substitution.
    Vector fk(n);
    for (int i = 0; i < n; ++i) {
      double v = std::sqrt(fac.diag[i]) * rng.normal();
      for (int t = fac.row_ptr[static_cast<std::size_t>(i)];
           t < fac.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
        v += fac.weight[static_cast<std::size_t>(t)] *
             fk[fac.col_idx[static_cast<std::size_t>(t)]];
      }
      fk[i] = v;
    }
    f.col(kk) = fk;
  }
  return f;
}

}  // namespace

void GenerativeSpec::check() const {
  if (n < 1 || q < 1 || p < 1 || num_factors < 1) {
    throw ConfigError("generative spec: dimensions must be positive");
  }
  if (beta.rows() != p || beta.cols() != q) throw ConfigError("generative spec: beta must be p x q");
  if (lambda.rows() != num_factors || lambda.cols() != q) {
    throw ConfigError("generative spec: lambda must be K x q");
  }
  if (sigma.rows() != q || sigma.cols() != q) throw ConfigError("generative spec: sigma must be q x q");
  if (decay.size() != num_factors || decay.minCoeff() <= 0.0) {
    throw ConfigError("generative spec: one positive decay per factor");
  }
  if (!(domain_lo < domain_hi)) throw ConfigError("generative spec: empty domain");
  if (n_holdout < 0 || n_holdout >= n) {
    throw ConfigError("generative spec: holdout count must lie in [0, n)");
  }
}

SimulationOutput generate(const GenerativeSpec& spec, Rng& rng) {
  spec.check();
  const int n = spec.n, q = spec.q, p = spec.p;

  Matrix raw(n, 2);
  const double span = spec.domain_hi - spec.domain_lo;
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 2; ++d) raw(i, d) = spec.domain_lo + span * rng.uniform();
  }
  LocationSet locs = make_location_set(raw);

  SimulationOutput out;
  Matrix f = draw_factors(locs, spec.decay, spec.allow_nngp_generation, out.nngp_generated, rng);

  Matrix x(n, p);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) x(i, j) = rng.normal();
  }
  Matrix noise = sample_standard_normal(n, q, rng) * cholesky(spec.sigma).transpose();
  Matrix y = x * spec.beta + f * spec.lambda + noise;
  Matrix omega = f * spec.lambda;
  omega.rowwise() += spec.beta.row(0);  // intercept-centered latent truth

  // Withheld locations leave S entirely: partial Fisher-Yates pick.
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int t = 0; t < spec.n_holdout; ++t) {
    int r = t + static_cast<int>(rng.uniform() * static_cast<double>(n - t));
    std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(r)]);
  }
  std::vector<int> holdout(idx.begin(), idx.begin() + spec.n_holdout);
  std::sort(holdout.begin(), holdout.end());
  std::vector<std::uint8_t> is_holdout(static_cast<std::size_t>(n), 0);
  for (int h : holdout) is_holdout[static_cast<std::size_t>(h)] = 1;

  const int n_obs = n - spec.n_holdout;
  Dataset& data = out.dataset;
  data.locs.coords.resize(n_obs, 2);
  data.locs.order.resize(static_cast<std::size_t>(n_obs));
  data.y.resize(n_obs, q);
  data.x.resize(n_obs, p);
  data.obs.assign(static_cast<std::size_t>(n_obs) * static_cast<std::size_t>(q), 1);
  out.f_true.resize(n_obs, spec.num_factors);
  out.omega_true.resize(n_obs, q);
  out.holdout_coords.resize(spec.n_holdout, 2);
  out.holdout_x.resize(spec.n_holdout, p);
  out.holdout_y.resize(spec.n_holdout, q);
  out.holdout_omega.resize(spec.n_holdout, q);

  int io = 0, ih = 0;
  for (int i = 0; i < n; ++i) {
    if (is_holdout[static_cast<std::size_t>(i)]) {
      out.holdout_coords.row(ih) = locs.coords.row(i);
      out.holdout_x.row(ih) = x.row(i);
      out.holdout_y.row(ih) = y.row(i);
      out.holdout_omega.row(ih) = omega.row(i);
      out.holdout_ids.push_back(std::to_string(i + 1));
      ++ih;
    } else {
      data.locs.coords.row(io) = locs.coords.row(i);
      data.locs.order[static_cast<std::size_t>(io)] = io;
      data.y.row(io) = y.row(i);
      data.x.row(io) = x.row(i);
      data.ids.push_back(std::to_string(i + 1));
      out.f_true.row(io) = f.row(i);
      out.omega_true.row(io) = omega.row(i);
      ++io;
    }
  }
  data.finalize();

  if (spec.misalign.kind != MisalignmentRule::Kind::None) {
    MisalignmentResult mis = apply_misalignment(data, spec.misalign, rng);
    out.masked = std::move(mis.masked);
    if (static_cast<int>(mis.kept_rows.size()) != n_obs) {
      Matrix f_keep(static_cast<long>(mis.kept_rows.size()), spec.num_factors);
      Matrix w_keep(static_cast<long>(mis.kept_rows.size()), q);
      for (std::size_t r = 0; r < mis.kept_rows.size(); ++r) {
        f_keep.row(static_cast<long>(r)) = out.f_true.row(mis.kept_rows[r]);
        w_keep.row(static_cast<long>(r)) = out.omega_true.row(mis.kept_rows[r]);
      }
      out.f_true = std::move(f_keep);
      out.omega_true = std::move(w_keep);
    }
  }
  return out;
}

MisalignmentResult apply_misalignment(Dataset& data, const MisalignmentRule& rule, Rng& rng) {
  MisalignmentResult res;
  const int n = data.n(), q = data.q();
  if (rule.kind == MisalignmentRule::Kind::None) {
    res.kept_rows.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) res.kept_rows[static_cast<std::size_t>(i)] = i;
    return res;
  }

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * static_cast<std::size_t>(q), 0);
  if (rule.kind == MisalignmentRule::Kind::RandomFraction) {
    if (rule.fraction.size() != q) {
      throw ConfigError("apply_misalignment: one fraction per response required");
    }
    for (int j = 0; j < q; ++j) {
      double r = rule.fraction[j];
      if (r < 0.0 || r > 1.0) throw ConfigError("apply_misalignment: fraction outside [0,1]");
      for (int i = 0; i < n; ++i) {
        if (rng.uniform() < r) {
          mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(q) +
               static_cast<std::size_t>(j)] = 1;
        }
      }
    }
  } else {
    if (rule.rect_lo.size() != data.locs.dim() || rule.rect_hi.size() != data.locs.dim()) {
      throw ConfigError("apply_misalignment: block rectangle dimension mismatch");
    }
    for (int i = 0; i < n; ++i) {
      bool inside = true;
      for (int d = 0; d < data.locs.dim(); ++d) {
        double c = data.locs.coords(i, d);
        if (c < rule.rect_lo[d] || c > rule.rect_hi[d]) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      for (int j : rule.responses) {
        if (j < 0 || j >= q) throw ConfigError("apply_misalignment: response index out of range");
        mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(q) +
             static_cast<std::size_t>(j)] = 1;
      }
    }
  }

  // Only already-observed cells can be masked; locations losing all
  // responses drop out of S.
  std::vector<int> kept;
  kept.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < q; ++j) {
      bool masked = mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(q) +
                         static_cast<std::size_t>(j)] != 0;
      if (data.observed(i, j) && !masked) any = true;
    }
    if (any) kept.push_back(i);
  }
  if (kept.empty()) throw ConfigError("apply_misalignment: rule empties the dataset");

  Dataset pruned;
  const int n_keep = static_cast<int>(kept.size());
  pruned.locs.coords.resize(n_keep, data.locs.dim());
  pruned.locs.order.resize(static_cast<std::size_t>(n_keep));
  pruned.y.resize(n_keep, q);
  pruned.x.resize(n_keep, data.p());
  pruned.obs.assign(static_cast<std::size_t>(n_keep) * static_cast<std::size_t>(q), 0);
  for (int r = 0; r < n_keep; ++r) {
    const int i = kept[static_cast<std::size_t>(r)];
    pruned.locs.coords.row(r) = data.locs.coords.row(i);
    pruned.locs.order[static_cast<std::size_t>(r)] = r;
    pruned.x.row(r) = data.x.row(i);
    pruned.ids.push_back(data.ids[static_cast<std::size_t>(i)]);
    for (int j = 0; j < q; ++j) {
      bool masked = mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(q) +
                         static_cast<std::size_t>(j)] != 0;
      if (data.observed(i, j) && !masked) {
        pruned.y(r, j) = data.y(i, j);
        pruned.set_observed(r, j, true);
      } else {
        pruned.y(r, j) = std::numeric_limits<double>::quiet_NaN();
        if (data.observed(i, j) && masked) {
          res.masked.push_back({r, j, data.y(i, j)});
        }
      }
    }
  }
  pruned.finalize();
  data = std::move(pruned);
  res.kept_rows = std::move(kept);
  return res;
}

}  // namespace blmc
