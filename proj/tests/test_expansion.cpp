// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "polar/distributions.hpp"
#include "polar/errors.hpp"
#include "polar/expansion.hpp"
#include "support.hpp"

using namespace polar;
using testing::flatten;
using testing::rng_for;

namespace {

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// f(Q) = <A, Q> + 0.5 <Q, B Q C> with fixed random A, B, C.
struct Probe {
  Matrix a, b, c;
  double value(const Matrix& q) const { return a.cwiseProduct(q).sum() + 0.5 * q.cwiseProduct(b * q * c).sum(); }
  Matrix grad(const Matrix& q) const { return a + 0.5 * (b * q * c + b.transpose() * q * c.transpose()); }
};

Probe random_probe(int p, int k, Rng& rng) {
  return Probe{standard_normal_matrix(p, k, rng), standard_normal_matrix(p, p, rng), standard_normal_matrix(k, k, rng)};
}

std::shared_ptr<const StiefelTarget> flat_target(int p, int k) {
  return std::make_shared<FunctionStiefelTarget>(p, k, [](const Matrix& q, Matrix& g) {
    g = Matrix::Zero(q.rows(), q.cols());
    return 0.0;
  });
}

std::shared_ptr<const StiefelTarget> probe_target(const Probe& probe, int p, int k) {
  return std::make_shared<FunctionStiefelTarget>(p, k, [probe](const Matrix& q, Matrix& g) {
    g = probe.grad(q);
    return probe.value(q);
  });
}

}  // namespace

TEST_SUITE("expansion") {
  TEST_CASE("polar_vjp at orthonormal X is the tangent projection") {
    Rng rng = rng_for(1);
    for (auto [p, k] : {std::pair{5, 3}, std::pair{4, 4}, std::pair{6, 1}}) {
      const Matrix x = sample_uniform_stiefel(p, k, rng).matrix();
      const Matrix g = standard_normal_matrix(p, k, rng);
      CHECK((polar_vjp(x, g) - (g - x * sym(x.transpose() * g))).norm() < 1e-12);
    }
  }

  TEST_CASE("polar_vjp is orthogonal to X") {
    Rng rng = rng_for(2);
    for (int t = 0; t < 20; ++t) {
      const Matrix x = standard_normal_matrix(6, 3, rng);
      const Matrix g = standard_normal_matrix(6, 3, rng);
      CHECK(std::abs(polar_vjp(x, g).cwiseProduct(x).sum()) < 1e-12 * g.norm() * x.norm());
    }
  }

  TEST_CASE("polar_vjp is linear in G") {
    Rng rng = rng_for(3);
    const Matrix x = standard_normal_matrix(5, 2, rng);
    const Matrix g1 = standard_normal_matrix(5, 2, rng), g2 = standard_normal_matrix(5, 2, rng);
    const Matrix lhs = polar_vjp(x, 2.0 * g1 - 0.5 * g2);
    const Matrix rhs = 2.0 * polar_vjp(x, g1) - 0.5 * polar_vjp(x, g2);
    CHECK((lhs - rhs).norm() < 1e-12);
  }

  TEST_CASE("polar_vjp matches Richardson-refined central differences") {
    Rng rng = rng_for(4);
    const int p = 5, k = 3;
    for (int t = 0; t < 5; ++t) {
      const Matrix x = standard_normal_matrix(p, k, rng);
      const Probe probe = random_probe(p, k, rng);
      const Matrix analytic = polar_vjp(x, probe.grad(polar_factor(x)));
      auto f = [&](const Matrix& m) { return probe.value(testing::polar_by_eigen(m)); };
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto central = [&](double h) {
          Matrix xp = x, xm = x;
          xp.data()[i] += h;
          xm.data()[i] -= h;
          return (f(xp) - f(xm)) / (2 * h);
        };
        const double h = 1e-3;
        const double numeric = (4.0 * central(h / 2) - central(h)) / 3.0;
        const double a = analytic.data()[i];
        CHECK(std::abs(a - numeric) / std::max(1.0, std::abs(a)) < 1e-6);
      }
    }
  }

  TEST_CASE("polar_vjp rejects degenerate input") {
    Matrix x = Matrix::Zero(3, 2);
    x(0, 0) = 1.0;
    CHECK_THROWS_AS(polar_vjp(x, Matrix::Ones(3, 2)), DegenerateInputError);
  }

  TEST_CASE("expanded flat target is the iid standard normal density") {
    Rng rng = rng_for(5);
    const GeneralExpansion target = expand_general(flat_target(2, 1));
    for (int i = 0; i < 100; ++i) {
      const Vector x = flatten(standard_normal_matrix(2, 1, rng));
      const double expect = -std::log(2.0 * std::numbers::pi) - 0.5 * x.squaredNorm();
      CHECK(std::abs(target.log_density(x) + target.log_constant() - expect) <= 1e-12);
      Vector g;
      target.log_density_gradient(x, g);
      CHECK((g + x).norm() < 1e-12);
    }
  }

  TEST_CASE("expanded density at an orthonormal point") {
    Rng rng = rng_for(6);
    const int p = 4, k = 2;
    const Probe probe = random_probe(p, k, rng);
    const GeneralExpansion target = expand_general(probe_target(probe, p, k));
    const Matrix q = sample_uniform_stiefel(p, k, rng).matrix();
    CHECK(target.log_density(flatten(q)) == doctest::Approx(-0.5 * k + probe.value(q)).epsilon(1e-13));
  }

  TEST_CASE("radial log density difference does not depend on f_Q") {
    Rng rng = rng_for(7);
    const int p = 4, k = 2;
    const GeneralExpansion flat = expand_general(flat_target(p, k));
    const GeneralExpansion tilted = expand_general(probe_target(random_probe(p, k, rng), p, k));
    for (int i = 0; i < 10; ++i) {
      const Vector x = flatten(standard_normal_matrix(p, k, rng));
      const double c = 0.3 + i * 0.25;
      const double d1 = flat.log_density(c * x) - flat.log_density(x);
      const double d2 = tilted.log_density(c * x) - tilted.log_density(x);
      CHECK(std::abs(d1 - d2) < 1e-12 * std::max(1.0, std::abs(d1)));
      CHECK(d1 == doctest::Approx(-(c * c - 1.0) * x.squaredNorm() / 2.0).epsilon(1e-12));
    }
  }

  TEST_CASE("MACG posterior with flat likelihood and identity Sigma reduces to the general expansion") {
    Rng rng = rng_for(8);
    const MacgPosteriorExpansion post = expand_macg_posterior(flat_target(3, 2), SpdMatrix(Matrix::Identity(3, 3)));
    const GeneralExpansion gen = expand_general(flat_target(3, 2));
    const Vector x0 = flatten(standard_normal_matrix(3, 2, rng));
    const double offset = post.log_density(x0) - gen.log_density(x0);
    for (int i = 0; i < 10; ++i) {
      const Vector x = flatten(standard_normal_matrix(3, 2, rng));
      Vector g1, g2;
      const double a = post.log_density_gradient(x, g1);
      const double b = gen.log_density_gradient(x, g2);
      CHECK(a - b == doctest::Approx(offset).epsilon(1e-12));
      CHECK((g1 - g2).norm() < 1e-12);
    }
  }

  TEST_CASE("gradient checks on expanded targets") {
    Rng rng = rng_for(9);
    const int p = 5, k = 2;
    const Probe probe = random_probe(p, k, rng);
    const GeneralExpansion gen = expand_general(probe_target(probe, p, k));
    const Matrix a = standard_normal_matrix(p, p, rng);
    const MacgPosteriorExpansion post =
        expand_macg_posterior(probe_target(probe, p, k), SpdMatrix(a * a.transpose() + Matrix::Identity(p, p)));
    for (int i = 0; i < 5; ++i) {
      const Vector x = flatten(standard_normal_matrix(p, k, rng));
      CHECK(check_gradient(gen, x).max_rel_error <= 1e-5);
      CHECK(check_gradient(post, x).max_rel_error <= 1e-5);
    }
  }

  TEST_CASE("check_gradient on a linear-gradient target") {
    const FunctionTarget normal(6, [](const Vector& x, Vector& g) {
      g = -x;
      return -0.5 * x.squaredNorm();
    });
    Rng rng = rng_for(10);
    const GradientReport r = check_gradient(normal, flatten(standard_normal_matrix(6, 1, rng)));
    CHECK(r.max_rel_error <= 1e-8);
    CHECK(r.failures.empty());
    CHECK(r.analytic.size() == 6);
  }

  TEST_CASE("check_gradient flags a wrong gradient and names the coordinate") {
    const FunctionTarget wrong(3, [](const Vector& x, Vector& g) {
      g = -x;
      g(2) = 0.0;
      return -0.5 * x.squaredNorm();
    });
    const Vector x = Vector::Constant(3, 0.7);
    const GradientReport r = check_gradient(wrong, x);
    CHECK(r.worst_index == 2);
    CHECK(r.max_rel_error > 0.9);
  }

  TEST_CASE("dimension mismatch on an expanded target is a domain error") {
    const GeneralExpansion target = expand_general(flat_target(3, 2));
    Vector g;
    CHECK_THROWS_AS(target.log_density_gradient(Vector::Ones(5), g), DomainError);
  }
}
