#include "blmc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "blmc/special.hpp"

namespace blmc {

namespace {

void check_pair(const Vector& a, const Vector& b, const char* what) {
  if (a.size() == 0) throw ConfigError(std::string(what) + ": empty input");
  if (a.size() != b.size()) throw ConfigError(std::string(what) + ": length mismatch");
}

}  // namespace

double rmspe(const Vector& pred, const Vector& truth) {
  check_pair(pred, truth, "rmspe");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double msel(const Vector& latent_mean, const Vector& latent_truth) {
  check_pair(latent_mean, latent_truth, "msel");
  return (latent_mean - latent_truth).squaredNorm() / static_cast<double>(latent_mean.size());
}

double crps_gaussian(double mu, double sigma, double y) {
  if (std::isnan(mu) || std::isnan(sigma) || std::isnan(y)) {
    throw NumericError("crps_gaussian: NaN input");
  }
  if (sigma < 0.0) throw ConfigError("crps_gaussian: sigma must be nonnegative");
  if (sigma == 0.0) return std::fabs(y - mu);
  double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) -
                  1.0 / std::sqrt(M_PI));
}

double interval_score(double lower, double upper, double y, double alpha) {
  if (lower > upper) throw ConfigError("interval_score: lower exceeds upper");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("interval_score: alpha in (0,1)");
  double s = upper - lower;
  if (y < lower) s += 2.0 / alpha * (lower - y);
  if (y > upper) s += 2.0 / alpha * (y - upper);
  return s;
}

double coverage(const Vector& lower, const Vector& upper, const Vector& y) {
  check_pair(lower, y, "coverage");
  check_pair(upper, y, "coverage");
  int inside = 0;
  for (long i = 0; i < y.size(); ++i) {
    if (lower[i] > upper[i]) throw ConfigError("coverage: lower exceeds upper");
    if (y[i] >= lower[i] && y[i] <= upper[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

double ess(const Vector& chain) {
  const long n = chain.size();
  if (n < 2) throw ConfigError("ess: chain too short");
  const double mean = chain.mean();
  const double nd = static_cast<double>(n);
  auto autocov = [&](long lag) {
    double s = 0.0;
    for (long t = 0; t + lag < n; ++t) s += (chain[t] - mean) * (chain[t + lag] - mean);
    return s / nd;
  };
  double g0 = autocov(0);
  if (g0 <= 0.0) return nd;  // constant chain
  double sum = 0.0;
  for (long k = 0;; ++k) {
    long lag1 = 2 * k, lag2 = 2 * k + 1;
    if (lag1 >= n) break;
    double pair = autocov(lag1) / g0;
    if (lag2 < n) pair += autocov(lag2) / g0;
    if (k > 0 && pair <= 0.0) break;  // initial positive sequence ends
    sum += pair;
  }
  double tau = 2.0 * sum - 1.0;
  if (tau <= 0.0) return nd;
  return std::min(nd, nd / tau);
}

double mcse(const Vector& chain, int batch_size) {
  const long n = chain.size();
  if (batch_size < 1) throw ConfigError("mcse: batch size must be positive");
  if (n < 2L * batch_size) throw ConfigError("mcse: chain shorter than two batches");
  const long n_batches = n / batch_size;
  Vector means(n_batches);
  for (long b = 0; b < n_batches; ++b) {
    means[b] = chain.segment(b * batch_size, batch_size).mean();
  }
  double grand = means.mean();
  double var = (means.array() - grand).square().sum() / static_cast<double>(n_batches - 1);
  return std::sqrt(var / static_cast<double>(n_batches));
}

ScoreReport score_predictions(const Matrix& mean, const Matrix& sd, const Matrix& lower,
                              const Matrix& upper, const Matrix& truth, double level) {
  if (mean.rows() != truth.rows() || mean.cols() != truth.cols()) {
    throw ConfigError("score_predictions: prediction/truth shape mismatch");
  }
  const int np = static_cast<int>(mean.rows());
  const int q = static_cast<int>(mean.cols());
  const double alpha = 1.0 - level;
  ScoreReport rep;
  rep.level = level;

  auto column_scores = [&](int j0, int j1) {
    long cells = static_cast<long>(np) * (j1 - j0);
    double se = 0.0, crps_sum = 0.0, int_sum = 0.0;
    long inside = 0;
    for (int j = j0; j < j1; ++j) {
      for (int i = 0; i < np; ++i) {
        double err = mean(i, j) - truth(i, j);
        se += err * err;
        crps_sum += crps_gaussian(mean(i, j), sd(i, j), truth(i, j));
        int_sum += interval_score(lower(i, j), upper(i, j), truth(i, j), alpha);
        if (truth(i, j) >= lower(i, j) && truth(i, j) <= upper(i, j)) ++inside;
      }
    }
    rep.rmspe.push_back(std::sqrt(se / static_cast<double>(cells)));
    rep.crps.push_back(-crps_sum / static_cast<double>(cells));
    rep.interval.push_back(int_sum / static_cast<double>(cells));
    rep.cvg.push_back(static_cast<double>(inside) / static_cast<double>(cells));
  };
  for (int j = 0; j < q; ++j) column_scores(j, j + 1);
  column_scores(0, q);  // pooled
  return rep;
}

void add_latent_scores(ScoreReport& rep, const Matrix& mean, const Matrix& sd,
                       const Matrix& truth) {
  if (mean.rows() != truth.rows() || mean.cols() != truth.cols()) {
    throw ConfigError("add_latent_scores: latent mean/truth shape mismatch");
  }
  const int n = static_cast<int>(mean.rows());
  const int q = static_cast<int>(mean.cols());
  const double alpha = 1.0 - rep.level;
  double z = 0.0;
  {
    double lo = 0.0, hi = 10.0, target = 1.0 - 0.5 * alpha;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    z = 0.5 * (lo + hi);
  }
  auto column_scores = [&](int j0, int j1) {
    long cells = static_cast<long>(n) * (j1 - j0);
    double se = 0.0, crps_sum = 0.0, int_sum = 0.0;
    long inside = 0;
    for (int j = j0; j < j1; ++j) {
      for (int i = 0; i < n; ++i) {
        double err = mean(i, j) - truth(i, j);
        se += err * err;
        crps_sum += crps_gaussian(mean(i, j), sd(i, j), truth(i, j));
        double l = mean(i, j) - z * sd(i, j), u = mean(i, j) + z * sd(i, j);
        int_sum += interval_score(l, u, truth(i, j), alpha);
        if (truth(i, j) >= l && truth(i, j) <= u) ++inside;
      }
    }
    rep.msel.push_back(se / static_cast<double>(cells));
    rep.crpsl.push_back(-crps_sum / static_cast<double>(cells));
    rep.intl.push_back(int_sum / static_cast<double>(cells));
    rep.cvgl.push_back(static_cast<double>(inside) / static_cast<double>(cells));
  };
  for (int j = 0; j < q; ++j) column_scores(j, j + 1);
  column_scores(0, q);
  rep.has_latent = true;
}

}  // namespace blmc
