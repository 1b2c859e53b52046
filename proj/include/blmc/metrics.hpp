#pragma once

#include <string>
#include <vector>

#include "blmc/types.hpp"

namespace blmc {

double rmspe(const Vector& pred, const Vector& truth);
double msel(const Vector& latent_mean, const Vector& latent_truth);

/// Closed-form CRPS of a Gaussian predictive; positively penalizing
/// (lower is better), |y - mu| in the sigma -> 0 limit. Report columns
/// negate it to follow the usual sign convention in summary tables.
double crps_gaussian(double mu, double sigma, double y);

/// (u - l) + (2/alpha) (l - y) 1{y < l} + (2/alpha) (y - u) 1{y > u}.
double interval_score(double lower, double upper, double y, double alpha);

/// Fraction of values inside their interval.
double coverage(const Vector& lower, const Vector& upper, const Vector& y);

/// Effective sample size by the initial-positive-sequence truncation of
/// the autocorrelation sum, clamped to (0, n].
double ess(const Vector& chain);

/// Monte Carlo standard error from nonoverlapping batch means.
double mcse(const Vector& chain, int batch_size = 50);

/// Per-response and pooled prediction scores. Columns are ordered
/// response 1..q then pooled. CRPS columns are stored negated, matching
/// the reporting convention.
struct ScoreReport {
  std::vector<double> rmspe, crps, interval, cvg;
  std::vector<double> msel, crpsl, intl, cvgl;  // empty without latent truth
  double level = 0.95;
  bool has_latent = false;
};

/// Scores held-out responses: RMSPE and Gaussian CRPS from (mean, sd),
/// interval score and coverage from the given bounds.
ScoreReport score_predictions(const Matrix& mean, const Matrix& sd, const Matrix& lower,
                              const Matrix& upper, const Matrix& truth, double level = 0.95);

/// Adds the latent-process scores (MSEL, CRPSL, INTL, CVGL) against known
/// latent truth, Gaussian intervals from (mean, sd).
void add_latent_scores(ScoreReport& report, const Matrix& mean, const Matrix& sd,
                       const Matrix& truth);

struct ChainDiagnostics {
  std::vector<std::string> name;
  std::vector<double> ess;
  std::vector<double> mcse;
};

}  // namespace blmc
