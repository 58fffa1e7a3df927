// SPDX-License-Identifier: Apache-2.0

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "polar/distributions.hpp"
#include "polar/errors.hpp"
#include "polar/matcore.hpp"
#include "polar/quadrature.hpp"
#include "support.hpp"

using namespace polar;
using testing::rng_for;

TEST_SUITE("matcore") {
  TEST_CASE("thin_svd of the identity") {
    const ThinSvd s = thin_svd(Matrix::Identity(3, 3));
    CHECK((s.d - Vector::Ones(3)).norm() < 1e-14);
    CHECK((s.u * s.d.asDiagonal() * s.v.transpose() - Matrix::Identity(3, 3)).norm() < 1e-14);
  }

  TEST_CASE("thin_svd of a diagonal matrix") {
    Matrix x = Matrix::Zero(2, 2);
    x(0, 0) = 3.0;
    x(1, 1) = 2.0;
    const ThinSvd s = thin_svd(x);
    CHECK(s.d(0) == doctest::Approx(3.0));
    CHECK(s.d(1) == doctest::Approx(2.0));
  }

  TEST_CASE("thin_svd singular values are the golden ratio pair") {
    Matrix x(2, 2);
    x << 1, 1, 0, 1;
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    const ThinSvd s = thin_svd(x);
    CHECK(s.d(0) == doctest::Approx(golden).epsilon(1e-14));
    CHECK(s.d(1) == doctest::Approx(1.0 / golden).epsilon(1e-14));
  }

  TEST_CASE("thin_svd reconstructs random rectangular input") {
    Rng rng = rng_for(1);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = standard_normal_matrix(7, 3, rng);
      const ThinSvd s = thin_svd(x);
      CHECK((s.u * s.d.asDiagonal() * s.v.transpose() - x).norm() <= 1e-10 * x.norm());
      CHECK(s.d(0) >= s.d(1));
      CHECK(s.d(1) >= s.d(2));
      CHECK(s.d(2) >= 0.0);
    }
  }

  TEST_CASE("require_rect rejects wide and non-finite input") {
    CHECK_THROWS_AS(require_rect(Matrix::Ones(2, 3)), DomainError);
    Matrix bad = Matrix::Ones(3, 2);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(require_rect(bad), DomainError);
    CHECK_THROWS_AS(polar_decompose(bad), DomainError);
  }

  TEST_CASE("polar_decompose on orthonormal input returns (X, I)") {
    Rng rng = rng_for(2);
    const Matrix q0 = sample_uniform_stiefel(5, 2, rng).matrix();
    const PolarPair pp = polar_decompose(q0);
    CHECK((pp.q.matrix() - q0).norm() < 1e-12);
    CHECK((pp.s.matrix() - Matrix::Identity(2, 2)).norm() < 1e-12);
  }

  TEST_CASE("polar_decompose under positive scaling") {
    Rng rng = rng_for(3);
    const Matrix q0 = sample_uniform_stiefel(4, 3, rng).matrix();
    const PolarPair pp = polar_decompose(2.5 * q0);
    CHECK((pp.q.matrix() - q0).norm() < 1e-12);
    CHECK((pp.s.matrix() - 6.25 * Matrix::Identity(3, 3)).norm() < 1e-12);
  }

  TEST_CASE("polar factor of [[1,1],[0,1]] matches the eigen oracle") {
    Matrix x(2, 2);
    x << 1, 1, 0, 1;
    // Closed form of (X^T X)^{-1/2} for X^T X = [[1,1],[1,2]].
    const Matrix s = x.transpose() * x;
    const double tr = s.trace(), det = s.determinant();
    const double root_det = std::sqrt(det);
    const double t = std::sqrt(tr + 2.0 * root_det);
    const Matrix sqrt_s = (s + root_det * Matrix::Identity(2, 2)) / t;
    const Matrix expect = x * sqrt_s.inverse();
    CHECK((polar_decompose(x).q.matrix() - expect).norm() < 1e-12);
    CHECK((polar_decompose(x).q.matrix() - testing::polar_by_eigen(x)).norm() < 1e-12);
  }

  TEST_CASE("polar pair reconstructs X and Q is orthonormal") {
    Rng rng = rng_for(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = standard_normal_matrix(6, 3, rng);
      const PolarPair pp = polar_decompose(x);
      const Matrix recon = pp.q.matrix() * sym_sqrt(pp.s).matrix();
      CHECK((recon - x).norm() <= 1e-8 * x.norm());
      CHECK(pp.q.orthogonality_error() < 1e-12);
    }
  }

  TEST_CASE("rank deficient input is a degenerate-input error naming the ratio") {
    Matrix x(3, 2);
    x << 1, 2, 2, 4, 3, 6;
    try {
      polar_decompose(x);
      FAIL("expected DegenerateInputError");
    } catch (const DegenerateInputError& e) {
      CHECK(std::string(e.what()).find("d_k/d_1") != std::string::npos);
    }
  }

  TEST_CASE("idempotence and scale equivariance") {
    Rng rng = rng_for(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = standard_normal_matrix(5, 2, rng);
      const PolarPair pp = polar_decompose(x);
      const PolarPair again = polar_decompose(pp.q.matrix());
      CHECK((again.q.matrix() - pp.q.matrix()).norm() < 1e-10);
      CHECK((again.s.matrix() - Matrix::Identity(2, 2)).norm() < 1e-10);
      const PolarPair scaled = polar_decompose(3.0 * x);
      CHECK((scaled.q.matrix() - pp.q.matrix()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((scaled.s.matrix() - 9.0 * pp.s.matrix()).norm() < 1e-10 * scaled.s.matrix().norm());
    }
  }

  TEST_CASE("polar factor is the nearest orthonormal matrix") {
    Rng rng = rng_for(6);
    for (auto [p, k] : {std::pair{2, 1}, std::pair{3, 2}, std::pair{4, 2}}) {
      const Matrix x = standard_normal_matrix(p, k, rng);
      const Matrix qx = polar_factor(x);
      const double best = (x - qx).norm();
      for (int i = 0; i < 1000; ++i) {
        const Matrix q = sample_uniform_stiefel(p, k, rng).matrix();
        CHECK(best <= (x - q).norm() + 1e-12);
      }
    }
  }

  TEST_CASE("sym_sqrt examples") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Matrix r = sym_sqrt(SpdMatrix(d)).matrix();
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(r(0, 1)) < 1e-15);
    CHECK((sym_sqrt(SpdMatrix(Matrix::Identity(3, 3)), true).matrix() - Matrix::Identity(3, 3)).norm() < 1e-15);

    Matrix s(2, 2);
    s << 2, 1, 1, 2;
    const Matrix root = sym_sqrt(SpdMatrix(s)).matrix();
    CHECK((root * root - s).norm() <= 1e-12);
    CHECK((root - root.transpose()).norm() == 0.0);
    // eigenvalues 1 and 3 with eigenvectors (1,-1)/sqrt2 and (1,1)/sqrt2
    const double a = (std::sqrt(3.0) + 1.0) / 2.0, b = (std::sqrt(3.0) - 1.0) / 2.0;
    CHECK(root(0, 0) == doctest::Approx(a));
    CHECK(root(0, 1) == doctest::Approx(b));
    const Matrix inv_root = sym_sqrt(SpdMatrix(s), true).matrix();
    CHECK((inv_root * inv_root * s - Matrix::Identity(2, 2)).norm() < 1e-12);
  }

  TEST_CASE("SpdMatrix validation") {
    Matrix asym(2, 2);
    asym << 2, 1, 0, 2;
    CHECK_THROWS_AS(SpdMatrix{asym}, DomainError);
    Matrix indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS(SpdMatrix{indefinite});
    Matrix s(2, 2);
    s << 2, 1, 1, 2;
    CHECK(SpdMatrix(s).log_det() == doctest::Approx(std::log(3.0)));
  }

  TEST_CASE("sym_sqrt rejects ill-conditioned input") {
    Matrix s = Matrix::Identity(2, 2);
    s(1, 1) = 1e-16;
    CHECK_THROWS_AS(sym_sqrt(SpdMatrix(s)), NumericalError);
  }

  TEST_CASE("log_multigamma") {
    CHECK(std::abs(log_multigamma(1, 1.0)) < 1e-15);
    CHECK(log_multigamma(1, 0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-14));
    const double direct = std::log(std::numbers::pi) * 0.5 + std::lgamma(2.0) + std::lgamma(1.5);
    CHECK(log_multigamma(2, 2.0) == doctest::Approx(direct).epsilon(1e-14));
    // the pi exponent is k(k-1)/4 = 1/2 for k = 2
    CHECK(log_multigamma(2, 2.0) == doctest::Approx(0.5 * std::log(std::numbers::pi) + std::lgamma(1.5)));
    CHECK_THROWS_AS(log_multigamma(3, 1.0), DomainError);
  }

  TEST_CASE("log_polar_jacobian examples") {
    const double pi = std::numbers::pi;
    for (double s : {0.1, 1.0, 7.0}) {
      CHECK(log_polar_jacobian(SpdMatrix(Matrix::Constant(1, 1, s)), 2) == doctest::Approx(-std::log(pi)));
    }
    CHECK(log_polar_jacobian(SpdMatrix(Matrix::Constant(1, 1, 2.0)), 3) ==
          doctest::Approx(std::lgamma(1.5) - 1.5 * std::log(pi) - 0.5 * std::log(2.0)));
    Matrix s(2, 2);
    s << 2, 1, 1, 2;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    const double expect = log_multigamma(2, 2.0) - 4.0 * std::log(pi) - 0.5 * std::log(det);
    CHECK(log_polar_jacobian(SpdMatrix(s), 4) == doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(log_polar_jacobian(SpdMatrix(s), 1), DomainError);
  }

  TEST_CASE("change of variables reproduces unit mass for p=2, k=1") {
    // f_X(x) = f_{S|Q}(s) f_Q(q) J with s = x^T x ~ chi2_2, f_Q = 1 against the
    // uniform probability on the circle and J the polar Jacobian.
    const quad::Rule rule = quad::composite_gauss_legendre(20, 40, -12.0, 12.0);
    const double mass = quad::integrate_2d(
        [](double a, double b) {
          const double s = a * a + b * b;
          const double chi2 = 0.5 * std::exp(-0.5 * s);
          return chi2 * 1.0 * std::exp(log_polar_jacobian(SpdMatrix(Matrix::Constant(1, 1, s)), 2));
        },
        rule, rule);
    CHECK(std::abs(mass - 1.0) < 1e-6);
    // and the factored form is the standard bivariate normal pointwise
    const double s = 0.7 * 0.7 + 1.3 * 1.3;
    CHECK(0.5 * std::exp(-0.5 * s) / std::numbers::pi == doctest::Approx(std::exp(-0.5 * s) / (2.0 * std::numbers::pi)));
  }
}
