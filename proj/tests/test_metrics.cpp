#include <doctest.h>

#include <cmath>

#include "blmc/metrics.hpp"
#include "blmc/rng.hpp"
#include "blmc/special.hpp"
#include "helpers.hpp"

using namespace blmc;

TEST_CASE("rmspe and msel") {
  Vector a(2), b(2);
  a << 1.0, 2.0;
  CHECK(rmspe(a, a) == 0.0);
  b << 4.0, 6.0;  // errors 3, 4
  CHECK(rmspe(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(msel(a, b) == doctest::Approx(12.5).epsilon(1e-12));
  CHECK_THROWS_AS(rmspe(Vector(0), Vector(0)), ConfigError);
  CHECK_THROWS_AS(rmspe(a, Vector::Zero(3)), ConfigError);
}

TEST_CASE("gaussian crps") {
  SUBCASE("degenerate sigma") {
    CHECK(crps_gaussian(1.0, 0.0, 1.0) == 0.0);
    CHECK(crps_gaussian(1.0, 0.0, 3.5) == doctest::Approx(2.5));
    CHECK(crps_gaussian(0.0, 1e-12, 0.0) == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("quadrature oracle") {
    // integral of (Phi((x-mu)/sigma) - 1{x >= y})^2 dx by Simpson's rule,
    // split at the indicator kink
    auto crps_quad = [](double mu, double sigma, double y) {
      auto simpson = [&](double lo, double hi, auto&& f) {
        const int steps = 20000;
        const double h = (hi - lo) / steps;
        double s = f(lo) + f(hi);
        for (int i = 1; i < steps; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
      };
      const double lo = std::min(mu - 14.0 * sigma, y), hi = std::max(mu + 14.0 * sigma, y);
      auto left = [&](double x) {
        double cdf = normal_cdf((x - mu) / sigma);
        return cdf * cdf;
      };
      auto right = [&](double x) {
        double cdf = normal_cdf((x - mu) / sigma);
        return (cdf - 1.0) * (cdf - 1.0);
      };
      return simpson(lo, y, left) + simpson(y, hi, right);
    };
    for (auto [mu, sigma, y] : {std::tuple{0.0, 1.0, 0.5}, std::tuple{1.0, 2.0, -0.7},
                                std::tuple{-2.0, 0.4, -2.2}}) {
      CHECK(crps_gaussian(mu, sigma, y) == doctest::Approx(crps_quad(mu, sigma, y)).epsilon(1e-6));
    }
  }
  SUBCASE("always nonnegative") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      CHECK(crps_gaussian(rng.normal(), 0.1 + rng.uniform(), rng.normal() * 3.0) >= 0.0);
    }
  }
  SUBCASE("nan rejected") {
    CHECK_THROWS_AS(crps_gaussian(std::nan(""), 1.0, 0.0), NumericError);
  }
}

TEST_CASE("interval score and coverage") {
  SUBCASE("inside costs the width") {
    CHECK(interval_score(-1.0, 2.0, 0.5, 0.05) == doctest::Approx(3.0));
  }
  SUBCASE("upper violation penalty arm") {
    double t = 0.7;
    CHECK(interval_score(-1.0, 2.0, 2.0 + t, 0.05) == doctest::Approx(3.0 + 2.0 * t / 0.05));
    CHECK(interval_score(-1.0, 2.0, -1.0 - t, 0.1) == doctest::Approx(3.0 + 2.0 * t / 0.1));
  }
  SUBCASE("score dominates the width, equality inside") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      double l = -rng.uniform(), u = rng.uniform(), y = 3.0 * rng.normal();
      double s = interval_score(l, u, y, 0.05);
      CHECK(s >= u - l - 1e-12);
      if (y >= l && y <= u) CHECK(s == doctest::Approx(u - l));
    }
  }
  SUBCASE("invalid interval") {
    CHECK_THROWS_AS(interval_score(1.0, 0.0, 0.5, 0.05), ConfigError);
  }
  SUBCASE("coverage fraction") {
    Vector l(4), u(4), y(4);
    l << 0, 0, 0, 0;
    u << 1, 1, 1, 1;
    y << 0.5, 2.0, -0.1, 1.0;
    CHECK(coverage(l, u, y) == doctest::Approx(0.5));
  }
}

TEST_CASE("ess") {
  SUBCASE("iid chain has ess near n") {
    Rng rng(12);
    const int n = 10000;
    Vector chain(n);
    for (int i = 0; i < n; ++i) chain[i] = rng.normal();
    double e = ess(chain);
    CHECK(e > 8000.0);
    CHECK(e <= 12000.0);
  }
  SUBCASE("ar(1) chain matches the analytic ratio within 30 percent") {
    Rng rng(13);
    const int n = 100000;
    const double rho = 0.9;
    Vector chain(n);
    chain[0] = rng.normal();
    for (int i = 1; i < n; ++i) {
      chain[i] = rho * chain[i - 1] + std::sqrt(1 - rho * rho) * rng.normal();
    }
    double ratio = ess(chain) / n;
    double expect = (1 - rho) / (1 + rho);
    CHECK(ratio > expect * 0.7);
    CHECK(ratio < expect * 1.3);
  }
  SUBCASE("constant chain clamps to n") {
    Vector chain = Vector::Ones(500);
    CHECK(ess(chain) == 500.0);
    CHECK(mcse(chain) == 0.0);
  }
  SUBCASE("affine invariance") {
    Rng rng(14);
    Vector chain(5000);
    chain[0] = 0.0;
    for (int i = 1; i < 5000; ++i) chain[i] = 0.5 * chain[i - 1] + rng.normal();
    CHECK(ess(chain) == doctest::Approx(ess(Vector(3.0 * chain.array() - 7.0))).epsilon(1e-9));
  }
}

TEST_CASE("mcse") {
  SUBCASE("iid chain is near sigma over root n") {
    Rng rng(15);
    const int n = 20000;
    Vector chain(n);
    for (int i = 0; i < n; ++i) chain[i] = 2.0 * rng.normal();
    double expect = 2.0 / std::sqrt(static_cast<double>(n));
    double got = mcse(chain, 50);
    CHECK(got > 0.7 * expect);
    CHECK(got < 1.3 * expect);
  }
  SUBCASE("too-short chain rejected") {
    CHECK_THROWS_AS(mcse(Vector::Ones(60), 50), ConfigError);
  }
}

TEST_CASE("score reports") {
  Matrix mean(2, 2), sd(2, 2), lower(2, 2), upper(2, 2), truth(2, 2);
  mean << 1.0, 2.0, 3.0, 4.0;
  sd = Matrix::Constant(2, 2, 0.5);
  lower = mean.array() - 1.0;
  upper = mean.array() + 1.0;
  truth << 1.1, 1.8, 2.5, 6.0;
  ScoreReport rep = score_predictions(mean, sd, lower, upper, truth, 0.95);
  REQUIRE(rep.rmspe.size() == 3);  // response 1, response 2, pooled
  CHECK(rep.rmspe[0] == doctest::Approx(std::sqrt((0.01 + 0.25) / 2)));
  CHECK(rep.cvg[2] == doctest::Approx(0.75));
  // crps is reported negated
  CHECK(rep.crps[0] < 0.0);
  CHECK(rep.crps[0] ==
        doctest::Approx(-(crps_gaussian(1.0, 0.5, 1.1) + crps_gaussian(3.0, 0.5, 2.5)) / 2));
  add_latent_scores(rep, mean, sd, truth);
  CHECK(rep.has_latent);
  CHECK(rep.msel[2] == doctest::Approx((0.01 + 0.04 + 0.25 + 4.0) / 4));
}
