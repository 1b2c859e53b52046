#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "blmc/linalg.hpp"
#include "helpers.hpp"

using namespace blmc;
using namespace blmc::testing;

namespace {

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix m) : m_(std::move(m)) {}
  int rows() const override { return static_cast<int>(m_.rows()); }
  int cols() const override { return static_cast<int>(m_.cols()); }
  void apply(const Vector& x, Vector& y) const override { y = m_ * x; }
  void apply_transpose(const Vector& y, Vector& x) const override { x = m_.transpose() * y; }

 private:
  Matrix m_;
};

}  // namespace

TEST_CASE("dense cholesky") {
  CHECK((cholesky(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);
  SUBCASE("hand 2x2") {
    Matrix m(2, 2);
    m << 4, 2, 2, 3;
    Matrix l = cholesky(m);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(l(0, 1) == 0.0);
  }
  SUBCASE("hilbert reconstruction") {
    Matrix h(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) h(i, j) = 1.0 / (i + j + 1);
    }
    Matrix l = cholesky(h);
    CHECK((l * l.transpose() - h).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("non-SPD fails loudly") {
    Matrix m(2, 2);
    m << 1, 2, 2, 1;
    CHECK_THROWS_AS(cholesky(m), NumericError);
    Matrix asym(2, 2);
    asym << 1, 0.5, 0.1, 1;
    CHECK_THROWS_AS(cholesky(asym), NumericError);
  }
}

TEST_CASE("lsmr") {
  Rng rng(301);
  SUBCASE("identity") {
    DenseOperator op(Matrix::Identity(6, 6));
    Vector b(6);
    for (int i = 0; i < 6; ++i) b[i] = rng.normal();
    LsmrResult res = lsmr_solve(op, b);
    CHECK(res.converged);
    CHECK(res.iterations <= 2);
    CHECK((res.x - b).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("orthonormal columns collapse to the projection") {
    Matrix g = sample_standard_normal(10, 4, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = Matrix(qr.householderQ()).leftCols(4);
    DenseOperator op(q);
    Vector b(10);
    for (int i = 0; i < 10; ++i) b[i] = rng.normal();
    LsmrResult res = lsmr_solve(op, b);
    CHECK(res.converged);
    CHECK((res.x - q.transpose() * b).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("overdetermined system matches the normal equations") {
    Matrix a = sample_standard_normal(12, 5, rng);
    Vector b(12);
    for (int i = 0; i < 12; ++i) b[i] = rng.normal();
    LsmrResult res = lsmr_solve(DenseOperator(a), b);
    Vector expect = (a.transpose() * a).llt().solve(a.transpose() * b);
    CHECK(res.converged);
    CHECK((res.x - expect).cwiseAbs().maxCoeff() < 1e-7);
  }
  SUBCASE("consistent SPD-normal systems agree with cholesky solves") {
    Matrix a = sample_standard_normal(9, 9, rng);
    Matrix spd = a * a.transpose() + 9.0 * Matrix::Identity(9, 9);
    Vector b(9);
    for (int i = 0; i < 9; ++i) b[i] = rng.normal();
    LsmrResult res = lsmr_solve(DenseOperator(spd), b);
    Vector expect = spd.llt().solve(b);
    CHECK((res.x - expect).cwiseAbs().maxCoeff() < 1e-7);
  }
  SUBCASE("iteration cap returns best iterate flagged") {
    Matrix a = sample_standard_normal(30, 20, rng);
    Vector b(30);
    for (int i = 0; i < 30; ++i) b[i] = rng.normal();
    LsmrOptions opts;
    opts.max_iter = 2;
    LsmrResult res = lsmr_solve(DenseOperator(a), b, opts);
    CHECK_FALSE(res.converged);
    CHECK(res.istop == 7);
    CHECK(res.iterations == 2);
    CHECK(res.x.allFinite());
  }
  SUBCASE("zero rhs is exact") {
    LsmrResult res = lsmr_solve(DenseOperator(Matrix::Identity(3, 3)), Vector::Zero(3));
    CHECK(res.converged);
    CHECK(res.x.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("woodbury identity path") {
  Rng rng(401);
  const int n = 15, q = 2, kf = 2;
  LocationSet locs = make_location_set(random_locations(n, rng));
  std::vector<Matrix> rho{dense_corr(locs, Kernel{KernelFamily::Exponential, 4.0}),
                          dense_corr(locs, Kernel{KernelFamily::Exponential, 11.0})};
  Matrix sigma(2, 2);
  sigma << 0.5, 0.1, 0.1, 0.4;
  std::vector<std::vector<int>> observed(n);
  for (int i = 0; i < n; ++i) {
    if (i % 3 == 0) {
      observed[static_cast<std::size_t>(i)] = {0};
    } else if (i % 3 == 1) {
      observed[static_cast<std::size_t>(i)] = {1};
    } else {
      observed[static_cast<std::size_t>(i)] = {0, 1};
    }
  }
  Vector u(kf * n);
  for (int i = 0; i < kf * n; ++i) u[i] = rng.normal();

  SUBCASE("no data coupling when lambda is zero") {
    Matrix lambda = Matrix::Zero(kf, q);
    Vector out = woodbury_apply(rho, lambda, sigma, observed, u);
    Vector expect(kf * n);
    for (int k = 0; k < kf; ++k) {
      expect.segment(k * n, n) = rho[static_cast<std::size_t>(k)] * u.segment(k * n, n);
    }
    CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("matches the dense inverse") {
    Matrix lambda(kf, q);
    lambda << 1.0, 0.8, -0.4, 1.3;
    // dense X~'X~ = F D^-1 F' + block-diag(rho_k^{-1})
    int n_obs = 0;
    for (const auto& os : observed) n_obs += static_cast<int>(os.size());
    Matrix f_op = Matrix::Zero(kf * n, n_obs);
    Matrix d_obs = Matrix::Zero(n_obs, n_obs);
    int col = 0;
    for (int i = 0; i < n; ++i) {
      const auto& os = observed[static_cast<std::size_t>(i)];
      for (std::size_t a = 0; a < os.size(); ++a) {
        for (int k = 0; k < kf; ++k) f_op(k * n + i, col) = lambda(k, os[a]);
        for (std::size_t b = 0; b < os.size(); ++b) {
          d_obs(col, col + static_cast<int>(b) - static_cast<int>(a)) = sigma(os[a], os[b]);
        }
        ++col;
      }
    }
    Matrix xtx = Matrix::Zero(kf * n, kf * n);
    for (int k = 0; k < kf; ++k) {
      xtx.block(k * n, k * n, n, n) =
          rho[static_cast<std::size_t>(k)].llt().solve(Matrix::Identity(n, n));
    }
    xtx += f_op * d_obs.llt().solve(f_op.transpose());
    Vector expect = xtx.llt().solve(u);
    Vector out = woodbury_apply(rho, lambda, sigma, observed, u);
    CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-7 * (1.0 + expect.cwiseAbs().maxCoeff()));
    SUBCASE("inverse consistency") {
      Vector back = xtx * out;
      CHECK((back - u).cwiseAbs().maxCoeff() < 1e-7 * (1.0 + u.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("distribution samplers") {
  SUBCASE("degenerate scales return the mean") {
    Rng rng(7);
    Matrix mean = sample_standard_normal(3, 2, rng);
    Matrix draw = sample_matrix_normal(mean, Matrix::Zero(3, 3), Matrix::Zero(2, 2), rng);
    CHECK((draw - mean).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("standard matrix normal unit variance") {
    Rng rng(11);
    const int draws = 100000;
    double ss = 0.0;
    for (int t = 0; t < draws; ++t) {
      Matrix z = sample_matrix_normal(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                      Matrix::Identity(2, 2), rng);
      ss += z.squaredNorm() / 4.0;
    }
    CHECK(ss / draws == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("vec identity: covariance of vec(Z) is V kron U") {
    Rng rng(13);
    Matrix u(2, 2), v(2, 2);
    u << 1.0, 0.3, 0.3, 0.8;
    v << 0.9, -0.2, -0.2, 0.5;
    Matrix lu = cholesky(u), lv = cholesky(v);
    const int draws = 200000;
    Matrix acc = Matrix::Zero(4, 4);
    for (int t = 0; t < draws; ++t) {
      Matrix z = sample_matrix_normal(Matrix::Zero(2, 2), lu, lv, rng);
      Vector vec(4);
      vec << z(0, 0), z(1, 0), z(0, 1), z(1, 1);  // columns stacked
      acc += vec * vec.transpose();
    }
    acc /= draws;
    Matrix expect(4, 4);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        expect.block(2 * a, 2 * b, 2, 2) = v(a, b) * u;
      }
    }
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double se = std::sqrt((expect(r, r) * expect(c, c) + expect(r, c) * expect(r, c)) /
                              draws);
        CHECK(std::fabs(acc(r, c) - expect(r, c)) < 3.5 * se);
      }
    }
  }
  SUBCASE("inverse wishart mean") {
    Rng rng(17);
    Matrix psi(2, 2);
    psi << 1.2, 0.3, 0.3, 0.9;
    const double nu = 7.0;
    const int draws = 100000;
    Matrix acc = Matrix::Zero(2, 2);
    for (int t = 0; t < draws; ++t) acc += sample_inverse_wishart(psi, nu, rng);
    acc /= draws;
    Matrix expect = psi / (nu - 2.0 - 1.0);
    // 3 MC sigma with a rough per-entry sd estimated from the IW spread
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        CHECK(std::fabs(acc(r, c) - expect(r, c)) < 0.02 * (1.0 + std::fabs(expect(r, c))));
      }
    }
  }
  SUBCASE("inverse gamma mean") {
    Rng rng(19);
    const double a = 3.0, b = 2.0;
    const int draws = 200000;
    double acc = 0.0;
    for (int t = 0; t < draws; ++t) acc += sample_inverse_gamma(a, b, rng);
    CHECK(acc / draws == doctest::Approx(b / (a - 1.0)).epsilon(0.02));
  }
  SUBCASE("invalid parameters") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_inverse_gamma(0.0, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_inverse_wishart(Matrix::Identity(3, 3), 1.0, rng), ConfigError);
  }
}

TEST_CASE("rng determinism and moments") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng rng(99);
  double mean = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    mean += z;
    m2 += z * z;
  }
  CHECK(std::fabs(mean / n) < 0.01);
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.01));
  double g = 0.0;
  for (int i = 0; i < n; ++i) g += rng.gamma(2.5, 2.0);
  CHECK(g / n == doctest::Approx(5.0).epsilon(0.02));
}
