// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include "doctest.h"
#include "polar/errors.hpp"
#include "polar/kernels.hpp"

using namespace polar;
using kernels::Backend;
using kernels::KernelTable;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar backend is always available and listed first") {
    const auto backends = kernels::available_backends();
    REQUIRE(!backends.empty());
    CHECK(backends.front() == Backend::kScalar);
    CHECK(kernels::table_for(Backend::kScalar).backend == Backend::kScalar);
  }

  TEST_CASE("unavailable backend throws") {
    const auto backends = kernels::available_backends();
    for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
      if (std::find(backends.begin(), backends.end(), b) == backends.end()) {
        CHECK_THROWS_AS(kernels::table_for(b), DomainError);
      }
    }
  }

  TEST_CASE("every backend matches the scalar reference") {
    std::mt19937_64 gen(11);
    const KernelTable& ref = kernels::table_for(Backend::kScalar);
    for (Backend b : kernels::available_backends()) {
      CAPTURE(kernels::backend_name(b));
      const KernelTable& t = kernels::table_for(b);
      for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 365u, 1001u}) {
        CAPTURE(n);
        const auto a = random_vec(n, gen);
        const auto c = random_vec(n, gen);
        std::vector<double> w = random_vec(n, gen);
        for (double& x : w) x = std::abs(x) + 0.1;

        CHECK(rel(t.dot(a.data(), c.data(), n), ref.dot(a.data(), c.data(), n)) < 1e-12);
        CHECK(rel(t.weighted_sq_norm(a.data(), w.data(), n), ref.weighted_sq_norm(a.data(), w.data(), n)) < 1e-12);

        std::vector<double> y1 = c, y2 = c;
        t.axpy(0.37, a.data(), y1.data(), n);
        ref.axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel(y1[i], y2[i]) < 1e-14);

        std::vector<double> q1 = c, q2 = c;
        t.scaled_drift(0.05, w.data(), a.data(), q1.data(), n);
        ref.scaled_drift(0.05, w.data(), a.data(), q2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(rel(q1[i], q2[i]) < 1e-14);

        for (double phi : {-0.9, 0.0, 0.5, 0.99}) {
          double ss1, cr1, ss2, cr2;
          t.ar1_innovations(a.data(), phi, n, &ss1, &cr1);
          ref.ar1_innovations(a.data(), phi, n, &ss2, &cr2);
          CHECK(rel(ss1, ss2) < 1e-12);
          CHECK(rel(cr1, cr2) < 1e-12);
          std::vector<double> g1(n), g2(n);
          t.ar1_innovation_grad(a.data(), phi, g1.data(), n);
          ref.ar1_innovation_grad(a.data(), phi, g2.data(), n);
          for (std::size_t i = 0; i < n; ++i) CHECK(rel(g1[i], g2[i]) < 1e-13);
        }
      }
    }
  }

  TEST_CASE("scalar reference against direct formulas") {
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
    const std::vector<double> w{2.0, 1.0, 4.0, 0.5};
    const KernelTable& ref = kernels::table_for(Backend::kScalar);
    CHECK(ref.dot(x.data(), w.data(), 4) == doctest::Approx(2.0 - 2.0 + 2.0 + 1.5));
    CHECK(ref.weighted_sq_norm(x.data(), w.data(), 4) == doctest::Approx(2.0 + 4.0 + 1.0 + 4.5));
    double ss, cross;
    ref.ar1_innovations(x.data(), 0.5, 4, &ss, &cross);
    // innovations: -2.5, 1.5, 2.75
    CHECK(ss == doctest::Approx(6.25 + 2.25 + 7.5625));
    CHECK(cross == doctest::Approx(-2.5 * 1.0 + 1.5 * -2.0 + 2.75 * 0.5));
    // gradient of ss by central differences
    std::vector<double> g(4);
    ref.ar1_innovation_grad(x.data(), 0.5, g.data(), 4);
    for (std::size_t i = 0; i < 4; ++i) {
      auto xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      double sp, sm, tmp;
      ref.ar1_innovations(xp.data(), 0.5, 4, &sp, &tmp);
      ref.ar1_innovations(xm.data(), 0.5, 4, &sm, &tmp);
      CHECK(g[i] == doctest::Approx((sp - sm) / 2e-6).epsilon(1e-7));
    }
  }

  TEST_CASE("active table is one of the available backends") {
    const auto backends = kernels::available_backends();
    CHECK(std::find(backends.begin(), backends.end(), kernels::active().backend) != backends.end());
  }
}
