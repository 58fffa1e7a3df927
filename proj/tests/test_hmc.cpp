// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "polar/diagnostics.hpp"
#include "polar/distributions.hpp"
#include "polar/errors.hpp"
#include "polar/gof.hpp"
#include "polar/hmc.hpp"
#include "polar/quadrature.hpp"
#include "support.hpp"

using namespace polar;

namespace {

FunctionTarget std_normal(Eigen::Index dim) {
  return FunctionTarget(dim, [](const Vector& x, Vector& g) {
    g = -x;
    return -0.5 * x.squaredNorm();
  });
}

FunctionTarget correlated_normal(double rho) {
  Matrix cov(2, 2);
  cov << 1, rho, rho, 1;
  const Matrix prec = cov.inverse();
  return FunctionTarget(2, [prec](const Vector& x, Vector& g) {
    g = -prec * x;
    return -0.5 * x.dot(prec * x);
  });
}

HmcConfig small_config() {
  HmcConfig c;
  c.chains = 2;
  c.warmup_iters = 500;
  c.sample_iters = 2000;
  c.seed = 42;
  return c;
}

}  // namespace

TEST_SUITE("hmc") {
  TEST_CASE("leapfrog local error is third order") {
    const FunctionTarget t = std_normal(1);
    const Vector q = Vector::Constant(1, 0.8), m = Vector::Constant(1, -0.6);
    const double e1 = std::abs(leapfrog(t, q, m, 0.1, 1).energy_error);
    const double e2 = std::abs(leapfrog(t, q, m, 0.05, 1).energy_error);
    const double e3 = std::abs(leapfrog(t, q, m, 0.025, 1).energy_error);
    CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.1));
    CHECK(e2 / e3 == doctest::Approx(8.0).epsilon(0.1));
  }

  TEST_CASE("energy error stays bounded for a stable step on a quadratic") {
    const FunctionTarget t = std_normal(3);
    Vector q(3), m(3);
    q << 1.0, -0.5, 2.0;
    m << 0.3, 0.9, -1.2;
    const double h0 = 0.5 * q.squaredNorm() + 0.5 * m.squaredNorm();
    double worst = 0.0;
    for (int block = 0; block < 100; ++block) {
      const LeapfrogResult r = leapfrog(t, q, m, 1.5, 100);
      REQUIRE(!r.divergent);
      q = r.q;
      m = r.m;
      worst = std::max(worst, std::abs(0.5 * q.squaredNorm() + 0.5 * m.squaredNorm() - h0));
    }
    // For eps = 1.5 the shadow Hamiltonian differs from H by a bounded factor.
    CHECK(worst < 2.0 * h0);
  }

  TEST_CASE("leapfrog is reversible") {
    polar::Rng rng = testing::rng_for(1);
    const Matrix a = standard_normal_matrix(4, 4, rng);
    const Matrix prec = a * a.transpose() + Matrix::Identity(4, 4);
    const FunctionTarget t(4, [&](const Vector& x, Vector& g) {
      g = -prec * x - x.array().cube().matrix();
      return -0.5 * x.dot(prec * x) - 0.25 * x.array().pow(4).sum();
    });
    const Vector q = testing::flatten(standard_normal_matrix(4, 1, rng));
    const Vector m = testing::flatten(standard_normal_matrix(4, 1, rng));
    const Vector inv_mass = Vector::Constant(4, 0.7);
    const LeapfrogResult fwd = leapfrog(t, q, m, 0.05, 25, inv_mass);
    const LeapfrogResult back = leapfrog(t, fwd.q, -fwd.m, 0.05, 25, inv_mass);
    CHECK((back.q - q).norm() <= 1e-10);
    CHECK((back.m + m).norm() <= 1e-10);
  }

  TEST_CASE("leapfrog reports non-finite and degenerate states as divergent") {
    const FunctionTarget blowup(1, [](const Vector& x, Vector& g) {
      if (std::abs(x(0)) > 1.0) throw DegenerateInputError("outside");
      g = -x;
      return -0.5 * x.squaredNorm();
    });
    const LeapfrogResult r = leapfrog(blowup, Vector::Zero(1), Vector::Constant(1, 5.0), 0.5, 10);
    CHECK(r.divergent);
    CHECK_THROWS_AS(leapfrog(blowup, Vector::Zero(1), Vector::Zero(1), 0.0, 1), DomainError);
  }

  TEST_CASE("iid normal moments and adapted acceptance") {
    const FunctionTarget t = std_normal(10);
    HmcConfig c;
    c.chains = 2;
    c.warmup_iters = 1000;
    c.sample_iters = 10000;
    c.seed = 7;
    const auto out = run_chains(t, c);
    std::vector<Matrix> draws;
    for (const auto& o : out) {
      draws.push_back(o.draws);
      CHECK(o.accept_rate == doctest::Approx(0.8).epsilon(0.0625));
      CHECK(o.divergence_count == 0);
    }
    const auto rows = summarize(draws, std::vector<std::string>(10, "x"));
    for (const SummaryRow& r : rows) {
      const double se = r.sd / std::sqrt(r.ess);
      CHECK(std::abs(r.mean) < 4.0 * se);
      CHECK(r.sd * r.sd > 0.9);
      CHECK(r.sd * r.sd < 1.1);
    }
  }

  TEST_CASE("correlated normal") {
    const FunctionTarget t = correlated_normal(0.9);
    HmcConfig c = small_config();
    c.sample_iters = 10000;
    const auto out = run_chains(t, c);
    Matrix all(0, 2);
    for (const auto& o : out) {
      Matrix next(all.rows() + o.draws.rows(), 2);
      next << all, o.draws;
      all = next;
    }
    const Matrix centered = all.rowwise() - all.colwise().mean();
    const Matrix cov = centered.transpose() * centered / (all.rows() - 1.0);
    CHECK(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)) == doctest::Approx(0.9).epsilon(0.02 / 0.9));
  }

  TEST_CASE("identical seeds give bit-identical draws regardless of thread count") {
    const FunctionTarget t = correlated_normal(0.5);
    HmcConfig c = small_config();
    c.chains = 3;
    c.threads = 1;
    const auto a = run_chains(t, c);
    c.threads = 3;
    const auto b = run_chains(t, c);
    for (int i = 0; i < 3; ++i) {
      CHECK(a[i].chain == i);
      CHECK((a[i].draws - b[i].draws).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((a[0].draws - a[1].draws).norm() > 0.0);
  }

  TEST_CASE("transition counts are symmetric (detailed balance)") {
    const FunctionTarget t = std_normal(1);
    HmcConfig c = small_config();
    c.chains = 1;
    c.sample_iters = 40000;
    const auto out = run_chains(t, c);
    const Matrix& d = out[0].draws;
    const std::vector<double> edges{-1.0, -0.3, 0.3, 1.0};
    auto bin = [&](double x) { return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()); };
    const int b = static_cast<int>(edges.size()) + 1;
    Matrix counts = Matrix::Zero(b, b);
    for (Eigen::Index i = 1; i < d.rows(); ++i) counts(bin(d(i - 1, 0)), bin(d(i, 0))) += 1.0;
    double stat = 0.0;
    int dof = 0;
    for (int i = 0; i < b; ++i)
      for (int j = i + 1; j < b; ++j) {
        const double s = counts(i, j) + counts(j, i);
        if (s == 0) continue;
        stat += std::pow(counts(i, j) - counts(j, i), 2) / s;
        ++dof;
      }
    // Consecutive pairs are dependent, so the statistic is only approximately chi-square.
    CHECK(gof::chi_square_sf(stat, dof) > 0.01);
  }

  TEST_CASE("expanded MACG on the circle matches the analytic density") {
    Matrix sigma = Matrix::Zero(2, 2);
    sigma(0, 0) = 4.0;
    sigma(1, 1) = 1.0;
    const MacgParams params{SpdMatrix(sigma)};
    const auto macg = std::make_shared<FunctionStiefelTarget>(2, 1, [params](const Matrix& q, Matrix& g) {
      g = log_macg_density_grad(q, params);
      return log_macg_density(StiefelPoint(q, 1e-8), params);
    });
    const GeneralExpansion target = expand_general(macg);
    HmcConfig c = small_config();
    c.chains = 4;
    c.sample_iters = 5000;
    const auto out = run_chains(target, c);
    std::vector<double> angles;
    for (const auto& o : out)
      for (Eigen::Index i = 0; i < o.draws.rows(); i += 5) {
        double th = std::atan2(o.draws(i, 1), o.draws(i, 0));
        angles.push_back(th < 0 ? th + 2.0 * std::numbers::pi : th);
      }
    auto density = [&](double th) {
      Matrix q(2, 1);
      q << std::cos(th), std::sin(th);
      return std::exp(log_macg_density(StiefelPoint(q), params)) / (2.0 * std::numbers::pi);
    };
    const auto r = gof::ks_test(angles, [&](double th) { return quad::integrate(density, 0.0, th, 1e-10); });
    CHECK(r.p_value > 0.01);
  }

  TEST_CASE("MACG posterior expansion with flat likelihood has an MACG margin") {
    Matrix sigma = Matrix::Zero(2, 2);
    sigma(0, 0) = 0.25;
    sigma(1, 1) = 1.0;
    const MacgParams params{SpdMatrix(sigma)};
    const auto flat = std::make_shared<FunctionStiefelTarget>(2, 1, [](const Matrix& q, Matrix& g) {
      g = Matrix::Zero(q.rows(), q.cols());
      return 0.0;
    });
    const MacgPosteriorExpansion target = expand_macg_posterior(flat, params.sigma);
    HmcConfig c = small_config();
    c.chains = 4;
    c.sample_iters = 5000;
    const auto out = run_chains(target, c);
    std::vector<double> angles;
    for (const auto& o : out)
      for (Eigen::Index i = 0; i < o.draws.rows(); i += 5) {
        double th = std::atan2(o.draws(i, 1), o.draws(i, 0));
        angles.push_back(th < 0 ? th + 2.0 * std::numbers::pi : th);
      }
    auto density = [&](double th) {
      Matrix q(2, 1);
      q << std::cos(th), std::sin(th);
      return std::exp(log_macg_density(StiefelPoint(q), params)) / (2.0 * std::numbers::pi);
    };
    const auto r = gof::ks_test(angles, [&](double th) { return quad::integrate(density, 0.0, th, 1e-10); });
    CHECK(r.p_value > 0.01);
  }

  TEST_CASE("divergences are counted and draws stay finite") {
    // Density supported on |x| < 3: trajectories that leave it diverge.
    const FunctionTarget walled(1, [](const Vector& x, Vector& g) {
      if (std::abs(x(0)) >= 3.0) throw DegenerateInputError("outside support");
      g = Vector::Zero(1);
      return 0.0;
    });
    HmcConfig c = small_config();
    c.chains = 1;
    c.init_step_size = 0.5;
    c.warmup_iters = 0;
    c.sample_iters = 2000;
    const auto out = run_chains(walled, c, {Vector::Zero(1)});
    CHECK(out[0].divergence_count > 0);
    CHECK(out[0].draws.allFinite());
    CHECK(out[0].draws.cwiseAbs().maxCoeff() < 3.0);
  }

  TEST_CASE("all-divergent warmup is a numerical error") {
    const FunctionTarget spike(1, [](const Vector& x, Vector& g) {
      if (x(0) != 0.0) throw DegenerateInputError("off the spike");
      g = Vector::Zero(1);
      return 0.0;
    });
    HmcConfig c = small_config();
    c.chains = 1;
    c.warmup_iters = 50;
    CHECK_THROWS_AS(run_chains(spike, c, {Vector::Zero(1)}), NumericalError);
  }

  TEST_CASE("config validation") {
    const FunctionTarget t = std_normal(1);
    HmcConfig c = small_config();
    c.target_accept = 1.0;
    CHECK_THROWS_AS(run_chains(t, c), DomainError);
    c = small_config();
    c.sample_iters = 0;
    CHECK_THROWS_AS(run_chains(t, c), DomainError);
    c = small_config();
    CHECK_THROWS_AS(run_chains(t, c, {Vector::Zero(1)}), DomainError);
    CHECK_THROWS_AS(run_chains(t, c, {Vector::Zero(2), Vector::Zero(2)}), DomainError);
  }

  TEST_CASE("warmup records a step size per iteration and a positive metric") {
    const FunctionTarget t = correlated_normal(0.3);
    HmcConfig c = small_config();
    c.chains = 1;
    const auto out = run_chains(t, c);
    CHECK(out[0].step_size_trace.size() == static_cast<std::size_t>(c.warmup_iters));
    CHECK((out[0].inv_mass_diag.array() > 0.0).all());
    CHECK(out[0].step_size > 0.0);
  }
}
