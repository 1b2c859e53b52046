#include "blmc/nngp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "blmc/parallel.hpp"

namespace blmc {

namespace {

constexpr double kJitter = 1e-10;

// Solves C a = c for the kriging weights of one row, retrying once with
// jittered diagonal. Returns the conditional variance 1 - a'c.
double solve_row(const Matrix& c_nn, const Vector& c_in, int row, Vector& a) {
  Eigen::LLT<Matrix> llt(c_nn);
  if (llt.info() != Eigen::Success) {
    Matrix jittered = c_nn;
    jittered.diagonal().array() += kJitter;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) {
      throw NumericError("nngp: singular neighbor correlation matrix at row " +
                         std::to_string(row) + " (duplicate locations?)");
    }
  }
  a = llt.solve(c_in);
  return 1.0 - a.dot(c_in);
}

}  // namespace

NNGPFactor build_factor(const NeighborGraph& graph, const LocationSet& locs,
                        const Kernel& k, int threads) {
  const int n = locs.size();
  if (graph.size() != n) throw ConfigError("build_factor: graph/location size mismatch");
  NNGPFactor fac;
  fac.decay = k.decay;
  fac.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) {
    fac.row_ptr[static_cast<std::size_t>(i) + 1] =
        fac.row_ptr[static_cast<std::size_t>(i)] +
        static_cast<int>(graph.neighbors[static_cast<std::size_t>(i)].size());
  }
  fac.col_idx.assign(static_cast<std::size_t>(fac.row_ptr[static_cast<std::size_t>(n)]), 0);
  fac.weight.assign(fac.col_idx.size(), 0.0);
  fac.diag.resize(n);

  parallel_for(n, threads, [&](int i) {
    const std::vector<int>& nbrs = graph.neighbors[static_cast<std::size_t>(i)];
    const int h = static_cast<int>(nbrs.size());
    if (h == 0) {
      fac.diag[i] = 1.0;
      return;
    }
    Matrix c_nn(h, h);
    Vector c_in(h);
    for (int a = 0; a < h; ++a) {
      c_in[a] = correlation(k, (locs.coords.row(i) - locs.coords.row(nbrs[a])).norm());
      for (int b = 0; b <= a; ++b) {
        double r = correlation(k, (locs.coords.row(nbrs[a]) - locs.coords.row(nbrs[b])).norm());
        c_nn(a, b) = r;
        c_nn(b, a) = r;
      }
    }
    Vector a_row;
    double d = solve_row(c_nn, c_in, i, a_row);
    if (!(d > 0.0)) {
      throw NumericError("nngp: nonpositive conditional variance at row " +
                         std::to_string(i) + " (duplicate locations?)");
    }
    fac.diag[i] = d;
    const int off = fac.row_ptr[static_cast<std::size_t>(i)];
    for (int a = 0; a < h; ++a) {
      fac.col_idx[static_cast<std::size_t>(off + a)] = nbrs[static_cast<std::size_t>(a)];
      fac.weight[static_cast<std::size_t>(off + a)] = a_row[a];
    }
  });
  return fac;
}

double log_density(const Vector& f, const NNGPFactor& fac) {
  const int n = fac.size();
  if (f.size() != n) throw ConfigError("log_density: length mismatch");
  constexpr double kLog2Pi = 1.8378770664093454836;
  double quad = 0.0, logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = f[i];
    for (int t = fac.row_ptr[static_cast<std::size_t>(i)];
         t < fac.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
      r -= fac.weight[static_cast<std::size_t>(t)] * f[fac.col_idx[static_cast<std::size_t>(t)]];
    }
    quad += r * r / fac.diag[i];
    logdet += std::log(fac.diag[i]);
  }
  return -0.5 * (n * kLog2Pi + logdet + quad);
}

Vector whitener_apply(const NNGPFactor& fac, const Vector& v) {
  const int n = fac.size();
  if (v.size() != n) throw ConfigError("whitener_apply: length mismatch");
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    double r = v[i];
    for (int t = fac.row_ptr[static_cast<std::size_t>(i)];
         t < fac.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
      r -= fac.weight[static_cast<std::size_t>(t)] * v[fac.col_idx[static_cast<std::size_t>(t)]];
    }
    out[i] = r / std::sqrt(fac.diag[i]);
  }
  return out;
}

Vector whitener_apply_transpose(const NNGPFactor& fac, const Vector& v) {
  const int n = fac.size();
  if (v.size() != n) throw ConfigError("whitener_apply_transpose: length mismatch");
  Vector scaled(n);
  for (int i = 0; i < n; ++i) scaled[i] = v[i] / std::sqrt(fac.diag[i]);
  Vector out = scaled;
  for (int i = 0; i < n; ++i) {
    for (int t = fac.row_ptr[static_cast<std::size_t>(i)];
         t < fac.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
      out[fac.col_idx[static_cast<std::size_t>(t)]] -=
          fac.weight[static_cast<std::size_t>(t)] * scaled[i];
    }
  }
  return out;
}

Vector PredictionWeights::conditional_mean(const Vector& f_ref) const {
  const int np = size();
  Vector out = Vector::Zero(np);
  for (int i = 0; i < np; ++i) {
    double s = 0.0;
    for (int t = row_ptr[static_cast<std::size_t>(i)];
         t < row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
      s += weight[static_cast<std::size_t>(t)] * f_ref[col_idx[static_cast<std::size_t>(t)]];
    }
    out[i] = s;
  }
  return out;
}

PredictionWeights build_prediction_weights(const LocationSet& ref, const Matrix& new_locs,
                                           int m, const Kernel& k, int threads) {
  PredictionNeighborhoods hoods = build_prediction_neighbors(ref, new_locs, m, threads);
  const int np = static_cast<int>(new_locs.rows());
  PredictionWeights w;
  w.decay = k.decay;
  w.row_ptr.assign(static_cast<std::size_t>(np) + 1, 0);
  for (int i = 0; i < np; ++i) {
    w.row_ptr[static_cast<std::size_t>(i) + 1] =
        w.row_ptr[static_cast<std::size_t>(i)] +
        static_cast<int>(hoods.neighbors[static_cast<std::size_t>(i)].size());
  }
  w.col_idx.assign(static_cast<std::size_t>(w.row_ptr[static_cast<std::size_t>(np)]), 0);
  w.weight.assign(w.col_idx.size(), 0.0);
  w.diag.resize(np);

  parallel_for(np, threads, [&](int i) {
    const std::vector<int>& nbrs = hoods.neighbors[static_cast<std::size_t>(i)];
    const int h = static_cast<int>(nbrs.size());
    Matrix c_nn(h, h);
    Vector c_un(h);
    for (int a = 0; a < h; ++a) {
      c_un[a] = correlation(k, (new_locs.row(i) - ref.coords.row(nbrs[a])).norm());
      for (int b = 0; b <= a; ++b) {
        double r =
            correlation(k, (ref.coords.row(nbrs[a]) - ref.coords.row(nbrs[b])).norm());
        c_nn(a, b) = r;
        c_nn(b, a) = r;
      }
    }
    Vector a_row;
    double d = solve_row(c_nn, c_un, i, a_row);
    // The conditional variance is nonnegative analytically; round-off
    // below zero is clamped.
    w.diag[i] = d > 0.0 ? d : 0.0;
    const int off = w.row_ptr[static_cast<std::size_t>(i)];
    for (int a = 0; a < h; ++a) {
      w.col_idx[static_cast<std::size_t>(off + a)] = nbrs[static_cast<std::size_t>(a)];
      w.weight[static_cast<std::size_t>(off + a)] = a_row[a];
    }
  });
  return w;
}

}  // namespace blmc
