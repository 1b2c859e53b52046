#include <doctest.h>

#include <cmath>

#include "blmc/predict.hpp"
#include "helpers.hpp"

using namespace blmc;
using namespace blmc::testing;

namespace {

// Minimal hand-built samples object with one or more identical draws.
PosteriorSamples toy_samples(const LocationSet& ref, const Matrix& f, const Matrix& beta,
                             const Matrix& lambda, const Matrix& sigma, double psi,
                             int n_draws, int m) {
  PosteriorSamples s;
  s.n = ref.size();
  s.q = static_cast<int>(beta.cols());
  s.p = static_cast<int>(beta.rows());
  s.num_factors = static_cast<int>(lambda.rows());
  s.ref_coords = ref.coords;
  s.config.num_factors = s.num_factors;
  s.config.num_neighbors = m;
  for (int t = 0; t < n_draws; ++t) {
    s.beta.push_back(beta);
    s.lambda.push_back(lambda);
    s.sigma.push_back(sigma);
    s.psi.push_back(Vector::Constant(s.num_factors, psi));
    s.f_draws.emplace_back(t, f);
  }
  return s;
}

}  // namespace

TEST_CASE("factor prediction") {
  Rng rng(61);
  LocationSet ref = make_location_set(random_locations(10, rng));
  Matrix f = sample_standard_normal(10, 1, rng);
  Matrix beta = Matrix::Zero(1, 1), lambda = Matrix::Ones(1, 1),
         sigma = Matrix::Identity(1, 1);
  SUBCASE("observed site returns the draw's value exactly") {
    PosteriorSamples s = toy_samples(ref, f, beta, lambda, sigma, 5.0, 3, 4);
    Matrix u = ref.coords.row(6);
    Rng r(9);
    auto draws = predict_factors(s, u, r);
    for (const auto& d : draws) CHECK(d(0, 0) == doctest::Approx(f(6, 0)).epsilon(1e-8));
  }
  SUBCASE("remote point reverts to the prior") {
    PosteriorSamples s = toy_samples(ref, f, beta, lambda, sigma, 9.0, 4000, 10);
    Matrix u(1, 2);
    u << 40.0, 40.0;
    Rng r(10);
    auto draws = predict_factors(s, u, r);
    double mean = 0.0, m2 = 0.0;
    for (const auto& d : draws) {
      mean += d(0, 0);
      m2 += d(0, 0) * d(0, 0);
    }
    mean /= static_cast<double>(draws.size());
    m2 = m2 / static_cast<double>(draws.size()) - mean * mean;
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(4000.0));
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("dense conditional oracle at m = n") {
    Kernel k{KernelFamily::Exponential, 6.0};
    PosteriorSamples s = toy_samples(ref, f, beta, lambda, sigma, k.decay, 1, 10);
    Matrix u = random_locations(1, rng);
    PredictionWeights w = build_prediction_weights(ref, u, 10, k);
    Matrix rho = dense_corr(ref, k);
    Matrix cross = correlation_matrix(k, u, ref.coords);
    double mean_expect = cross.row(0).dot(rho.llt().solve(f.col(0)));
    double var_expect = 1.0 - cross.row(0).dot(rho.llt().solve(cross.row(0).transpose()));
    CHECK(w.conditional_mean(f.col(0))[0] == doctest::Approx(mean_expect).epsilon(1e-8));
    CHECK(w.diag[0] == doctest::Approx(var_expect).epsilon(1e-8));
  }
}

TEST_CASE("response prediction") {
  Rng rng(71);
  LocationSet ref = make_location_set(random_locations(8, rng));
  Matrix f = sample_standard_normal(8, 2, rng);
  Matrix beta(2, 2), lambda(2, 2), sigma(2, 2);
  beta << 1.0, -1.0, 0.5, 2.0;
  lambda << 1.0, 1.0, 0.0, 2.0;
  sigma << 0.4, 0.15, 0.15, 0.3;
  SUBCASE("noiseless single draw is the linear predictor") {
    PosteriorSamples s =
        toy_samples(ref, f, beta, lambda, Matrix::Zero(2, 2) /* Sigma -> 0 */, 5.0, 1, 7);
    // zero Sigma is not SPD; emulate the limit with a tiny jitter
    s.sigma[0] = Matrix::Identity(2, 2) * 1e-30;
    Matrix x_u(3, 2);
    x_u << 1.0, 0.2, 1.0, -0.4, 1.0, 1.1;
    std::vector<Matrix> f_u{sample_standard_normal(3, 2, rng)};
    Rng r(2);
    PredictionResult res = predict_responses(s, f_u, x_u, r, 0.95);
    Matrix expect = x_u * beta + f_u[0] * lambda;
    CHECK((res.mean - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("row covariance over draws recovers Sigma") {
    const int draws = 50000;
    PosteriorSamples s = toy_samples(ref, f, beta, lambda, sigma, 5.0, draws, 7);
    Matrix x_u(1, 2);
    x_u << 1.0, 0.3;
    std::vector<Matrix> f_u(static_cast<std::size_t>(draws), Matrix::Zero(1, 2));
    Rng r(5);
    PredictionResult res = predict_responses(s, f_u, x_u, r, 0.95, true);
    Matrix acc = Matrix::Zero(2, 2);
    Vector mean = Vector::Zero(2);
    for (const auto& d : res.draws) mean += d.row(0).transpose();
    mean /= draws;
    for (const auto& d : res.draws) {
      Vector c = d.row(0).transpose() - mean;
      acc += c * c.transpose();
    }
    acc /= (draws - 1);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        double se = std::sqrt((sigma(a, a) * sigma(b, b) + sigma(a, b) * sigma(a, b)) / draws);
        CHECK(std::fabs(acc(a, b) - sigma(a, b)) < 4.0 * se);
      }
    }
  }
  SUBCASE("interval nesting is monotone in level") {
    const int draws = 400;
    PosteriorSamples s = toy_samples(ref, f, beta, lambda, sigma, 5.0, draws, 7);
    Matrix x_u(2, 2);
    x_u << 1.0, 0.0, 1.0, 1.0;
    std::vector<Matrix> f_u(static_cast<std::size_t>(draws), Matrix::Zero(2, 2));
    Rng r1(8), r2(8);
    PredictionResult wide = predict_responses(s, f_u, x_u, r1, 0.95);
    PredictionResult narrow = predict_responses(s, f_u, x_u, r2, 0.5);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(wide.lower(i, j) <= narrow.lower(i, j));
        CHECK(narrow.upper(i, j) <= wide.upper(i, j));
        CHECK(wide.lower(i, j) <= wide.mean(i, j));
        CHECK(wide.mean(i, j) <= wide.upper(i, j));
      }
    }
  }
}

TEST_CASE("latent summaries") {
  SUBCASE("constant rows give a zero covariance") {
    Matrix omega = Matrix::Ones(5, 2);
    omega.col(1) *= -2.0;
    CHECK(latent_cov(omega).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("direct formula on a random 6x2 matrix") {
    Rng rng(3);
    Matrix omega = sample_standard_normal(6, 2, rng);
    Matrix cov = latent_cov(omega);
    Matrix expect = Matrix::Zero(2, 2);
    Eigen::RowVectorXd mean = omega.colwise().mean();
    for (int i = 0; i < 6; ++i) {
      Vector c = (omega.row(i) - mean).transpose();
      expect += c * c.transpose();
    }
    expect /= 6.0;
    CHECK((cov - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("reported covariance values imply the reported correlation") {
    double o11 = 1.675e-2, o12 = -6.873e-3, o22 = 3.764e-3;
    double corr = o12 / std::sqrt(o11 * o22);
    CHECK(corr == doctest::Approx(-0.866).epsilon(1e-3));
  }
}
