// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include "json.hpp"
#include "polar/cli.hpp"
#include "polar/distributions.hpp"
#include "polar/eigenmodel.hpp"
#include "polar/errors.hpp"
#include "polar/fpca.hpp"
#include "polar/quadrature.hpp"

namespace polar::cli {

namespace {

using Namer = std::function<std::string(Eigen::Index)>;

std::string matrix_coord(const char* name, Eigen::Index idx, Eigen::Index rows) {
  return std::string(name) + "[" + std::to_string(idx % rows + 1) + "," + std::to_string(idx / rows + 1) + "]";
}

/// Worst relative error over several random points of one target.
CheckEntry gradient_suite(const std::string& name, const UnconstrainedTarget& target,
                          const std::function<Vector(Rng&)>& point, const Namer& namer, const CheckOptions& o,
                          Rng& rng) {
  CheckEntry e;
  e.name = name;
  e.tolerance = o.tolerance;
  bool failed_eval = false;
  for (int i = 0; i < o.points; ++i) {
    const Vector x = point(rng);
    const GradientReport r = check_gradient(target, x);
    if (!r.failures.empty()) failed_eval = true;
    if (r.max_rel_error >= e.max_rel_error) {
      e.max_rel_error = r.max_rel_error;
      e.worst = "point " + std::to_string(i) + ", coordinate " + std::to_string(r.worst_index) + " (" +
                namer(r.worst_index) + "): analytic " + std::to_string(r.analytic[r.worst_index]) + ", numeric " +
                std::to_string(r.numeric[r.worst_index]);
    }
  }
  e.passed = !failed_eval && e.max_rel_error <= o.tolerance;
  return e;
}

class UniformCircle final : public StiefelTarget {
 public:
  int p() const override { return 2; }
  int k() const override { return 1; }
  double log_density_gradient(const Matrix& q, Matrix& grad) const override {
    grad = Matrix::Zero(q.rows(), q.cols());
    return 0.0;
  }
};

// MACG times exp(tr(F^T Q)); the linear tilt breaks right-rotation
// invariance so the in-span part of the pullback is exercised.
class TiltedMacg final : public StiefelTarget {
 public:
  TiltedMacg(MacgParams params, Matrix tilt) : params_(std::move(params)), tilt_(std::move(tilt)) {}
  int p() const override { return static_cast<int>(params_.sigma.dim()); }
  int k() const override { return static_cast<int>(tilt_.cols()); }
  double log_density_gradient(const Matrix& q, Matrix& grad) const override {
    grad = log_macg_density_grad(q, params_) + tilt_;
    return log_macg_density(StiefelPoint(q, 1e-8), params_) + tilt_.cwiseProduct(q).sum();
  }

 private:
  MacgParams params_;
  Matrix tilt_;
};

}  // namespace

Matrix faulty_polar_vjp(const ThinSvd& svd, const Matrix& g) {
  const Matrix& u = svd.u;
  const Matrix complement = g - u * (u.transpose() * g);
  const Matrix correct = polar_vjp(svd, g);
  const Matrix complement_part = complement * svd.v * svd.d.cwiseInverse().asDiagonal() * svd.v.transpose();
  return -(correct - complement_part) + complement_part;
}

bool CheckReport::passed() const {
  for (const CheckEntry& e : entries)
    if (!e.passed) return false;
  return !entries.empty();
}

CheckReport cmd_check(const CheckOptions& o) {
  if (o.points < 1) throw DomainError("check: --points must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(o.seed & 0xffffffffu), static_cast<std::uint32_t>(o.seed >> 32)};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  CheckReport report;

  {
    // Polar pullback through the general expansion of a tilted MACG target.
    const int p = 5, k = 2;
    const Matrix a = standard_normal_matrix(p, p, rng);
    const MacgParams params{SpdMatrix(a * a.transpose() + Matrix::Identity(p, p))};
    const GeneralExpansion target(std::make_shared<TiltedMacg>(params, 2.0 * standard_normal_matrix(p, k, rng)), o.vjp);
    report.entries.push_back(gradient_suite(
        "polar_vjp", target, [&](Rng& r) { return Vector(Eigen::Map<const Vector>(standard_normal_matrix(p, k, r).data(), p * k)); },
        [&](Eigen::Index i) { return matrix_coord("X", i, p); }, o, rng));
  }
  {
    const int p = 20, k = 3;
    const Vector lambda = (Vector(k) << 6.0, -4.0, 3.0).finished();
    const EigenmodelData data = simulate_eigenmodel(p, -0.5, sample_uniform_stiefel(p, k, rng), lambda, rng);
    const EigenmodelTarget target(data, k, o.vjp);
    auto point = [&](Rng& r) {
      EigenmodelParams prm;
      prm.c = normal(r);
      prm.x = standard_normal_matrix(p, k, r);
      prm.lambda = 3.0 * standard_normal_matrix(k, 1, r);
      return pack(prm);
    };
    auto namer = [&](Eigen::Index i) -> std::string {
      if (i == 0) return "c";
      if (i <= p * k) return matrix_coord("X", i - 1, p);
      return "lambda_" + std::to_string(i - p * k);
    };
    report.entries.push_back(gradient_suite("eigenmodel_gradient", target, point, namer, o, rng));
  }
  {
    const Eigen::Index n = 8, p = 24;
    const int k = 2;
    std::vector<double> grid;
    for (Eigen::Index j = 0; j < p; ++j) grid.push_back(15.0 * static_cast<double>(j));
    const double rho = kRhoPriorMean;
    const SimulatedFpca sim = simulate_fpca(n, grid, k, (Vector(k) << 40.0, 20.0).finished(), 1.0, 0.5, rho, rng);
    const FpcaHyper hyper = fpca_empirical_bayes(sim.data.y, k);
    const FpcaTarget target(sim.data, hyper, o.vjp);
    const SpdMatrix kmat = se_kernel(SeKernelParams{grid, rho, hyper.nugget});
    auto point = [&](Rng& r) {
      FpcaParams prm;
      prm.x_u = standard_normal_matrix(n, k, r);
      prm.x_v = sample_matrix_normal(kmat, k, r);
      prm.eta_d = (Vector(k) << std::log(40.0), std::log(20.0)).finished() + 0.3 * standard_normal_matrix(k, 1, r);
      prm.eta_sigma = 0.3 * normal(r);
      prm.eta_phi = 0.5 + 0.3 * normal(r);
      prm.eta_rho = std::log(rho) + 0.2 * normal(r);
      return pack(prm);
    };
    auto namer = [&](Eigen::Index i) -> std::string {
      if (i < n * k) return matrix_coord("X_U", i, n);
      if (i < (n + p) * k) return matrix_coord("X_V", i - n * k, p);
      const Eigen::Index j = i - (n + p) * k;
      if (j < k) return "eta_d_" + std::to_string(j + 1);
      static const char* names[] = {"eta_sigma", "eta_phi", "eta_rho"};
      return names[j - k];
    };
    report.entries.push_back(gradient_suite("fpca_gradient", target, point, namer, o, rng));
  }
  {
    // Total mass of the expanded uniform-circle density on R^2.
    const GeneralExpansion target(std::make_shared<UniformCircle>());
    const double log_c = target.log_constant();
    const quad::Rule rule = quad::composite_gauss_legendre(20, 40, -12.0, 12.0);
    const double mass = quad::integrate_2d(
        [&](double a, double b) { return std::exp(target.log_density(Vector{{a, b}}) + log_c); }, rule, rule);
    CheckEntry e;
    e.name = "change_of_variables_mass";
    e.tolerance = 1e-6;
    e.max_rel_error = std::abs(mass - 1.0);
    e.worst = "mass " + std::to_string(mass);
    e.passed = e.max_rel_error <= e.tolerance;
    report.entries.push_back(e);
  }
  {
    const double phi = 0.5;
    const std::size_t len = 100000;
    std::vector<double> series(len);
    double v = normal(rng) / std::sqrt(1.0 - phi * phi);
    for (double& s : series) {
      v = phi * v + normal(rng);
      s = v;
    }
    const double expected = (1.0 - phi) / (1.0 + phi);
    const double got = ess(series) / static_cast<double>(len);
    CheckEntry e;
    e.name = "ess_oracle_ar1";
    e.tolerance = 0.1;
    e.max_rel_error = std::abs(got - expected) / expected;
    e.worst = "ess/n " + std::to_string(got) + " vs " + std::to_string(expected);
    e.passed = e.max_rel_error <= e.tolerance;
    report.entries.push_back(e);
  }

  nlohmann::ordered_json j;
  j["passed"] = report.passed();
  j["seed"] = o.seed;
  j["points"] = o.points;
  j["fault_injected"] = o.vjp != nullptr;
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckEntry& e : report.entries) {
    j["checks"].push_back({{"name", e.name},
                           {"passed", e.passed},
                           {"max_rel_error", e.max_rel_error},
                           {"tolerance", e.tolerance},
                           {"worst", e.worst}});
  }
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error("cannot create output directory " + o.out.string() + ": " + ec.message());
  std::ofstream os(o.out / "check_report.json");
  if (!os) throw Error("cannot write " + (o.out / "check_report.json").string());
  os << j.dump(2) << '\n';
  return report;
}

}  // namespace polar::cli
