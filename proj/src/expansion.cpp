// SPDX-License-Identifier: Apache-2.0

#include "polar/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "polar/distributions.hpp"
#include "polar/errors.hpp"

namespace polar {

double UnconstrainedTarget::log_density(const Vector& x) const {
  Vector g(dim());
  return log_density_gradient(x, g);
}

double StiefelTarget::log_density(const Matrix& q) const {
  Matrix g(q.rows(), q.cols());
  return log_density_gradient(q, g);
}

Matrix polar_vjp(const ThinSvd& svd, const Matrix& g) {
  const Eigen::Index k = svd.d.size();
  const double d1 = svd.d(0);
  const double floor = 1e-10 * d1;
  if (!(d1 > 0.0) || !(2.0 * svd.d(k - 1) > floor)) {
    std::ostringstream msg;
    msg << "polar_vjp: singular values too small for the Sylvester solve (d_k = " << svd.d(k - 1)
        << ", d_1 = " << d1 << ")";
    throw DegenerateInputError(msg.str());
  }
  const Matrix ut_g = svd.u.transpose() * g;
  const Matrix g_hat = ut_g * svd.v;
  Matrix m(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) m(i, j) = g_hat(i, j) / (svd.d(i) + svd.d(j));
  const Matrix skew = m - m.transpose();
  const Matrix v_dinv = svd.v * svd.d.cwiseInverse().asDiagonal();
  const Matrix complement = (g - svd.u * ut_g) * v_dinv * svd.v.transpose();
  return svd.u * skew * svd.v.transpose() + complement;
}

Matrix polar_vjp(const Matrix& x, const Matrix& g) {
  if (g.rows() != x.rows() || g.cols() != x.cols()) throw DomainError("polar_vjp: cotangent shape mismatch");
  return polar_vjp(thin_svd(x), g);
}

namespace {

Eigen::Map<const Matrix> as_matrix(const Vector& x, int p, int k) { return {x.data(), p, k}; }

PolarVjpFn or_default(PolarVjpFn f) {
  return f ? f : static_cast<PolarVjpFn>(&polar_vjp);
}

void check_dim(const Vector& x, Eigen::Index dim) {
  if (x.size() != dim) throw DomainError("target: state vector has the wrong dimension");
}

}  // namespace

GeneralExpansion::GeneralExpansion(std::shared_ptr<const StiefelTarget> target, PolarVjpFn vjp)
    : target_(std::move(target)), p_(target_->p()), k_(target_->k()), vjp_(or_default(vjp)) {
  if (p_ < k_ || k_ < 1) throw DomainError("GeneralExpansion: requires p >= k >= 1");
}

double GeneralExpansion::log_density_gradient(const Vector& x, Vector& grad) const {
  check_dim(x, dim());
  const Matrix xm = as_matrix(x, p_, k_);
  const ThinSvd svd = thin_svd(xm);
  const Matrix q = polar_factor(svd);
  Matrix gq(p_, k_);
  const double lq = target_->log_density_gradient(q, gq);
  const Matrix gx = -xm + vjp_(svd, gq);
  grad = Eigen::Map<const Vector>(gx.data(), gx.size());
  return -0.5 * xm.squaredNorm() + lq;
}

double GeneralExpansion::log_constant() const {
  return -0.5 * static_cast<double>(p_) * k_ * std::log(2.0 * std::numbers::pi);
}

GeneralExpansion expand_general(std::shared_ptr<const StiefelTarget> target) {
  return GeneralExpansion(std::move(target));
}

MacgPosteriorExpansion::MacgPosteriorExpansion(std::shared_ptr<const StiefelTarget> loglik, SpdMatrix sigma,
                                               PolarVjpFn vjp)
    : loglik_(std::move(loglik)), sigma_(std::move(sigma)), p_(loglik_->p()), k_(loglik_->k()), vjp_(or_default(vjp)) {
  if (sigma_.dim() != p_) throw DomainError("MacgPosteriorExpansion: Sigma must be p x p");
}

double MacgPosteriorExpansion::log_density_gradient(const Vector& x, Vector& grad) const {
  check_dim(x, dim());
  const Matrix xm = as_matrix(x, p_, k_);
  const ThinSvd svd = thin_svd(xm);
  const Matrix q = polar_factor(svd);
  Matrix gq(p_, k_);
  const double ll = loglik_->log_density_gradient(q, gq);
  const Matrix gx = -sigma_.solve(xm) + vjp_(svd, gq);
  grad = Eigen::Map<const Vector>(gx.data(), gx.size());
  return ll + log_matrix_normal(xm, sigma_);
}

MacgPosteriorExpansion expand_macg_posterior(std::shared_ptr<const StiefelTarget> loglik, SpdMatrix sigma) {
  return MacgPosteriorExpansion(std::move(loglik), std::move(sigma));
}

namespace {

// Ridders' extrapolation of central differences along coordinate i.
double ridders_derivative(const UnconstrainedTarget& target, Vector x, Eigen::Index i, double h) {
  constexpr int kTab = 10;
  constexpr double kCon = 1.4;
  constexpr double kCon2 = kCon * kCon;
  double table[kTab][kTab];
  const double x0 = x(i);
  auto central = [&](double step) {
    x(i) = x0 + step;
    const double fp = target.log_density(x);
    x(i) = x0 - step;
    const double fm = target.log_density(x);
    x(i) = x0;
    return (fp - fm) / (2.0 * step);
  };
  table[0][0] = central(h);
  double best = table[0][0];
  double err = std::numeric_limits<double>::max();
  for (int r = 1; r < kTab; ++r) {
    h /= kCon;
    table[0][r] = central(h);
    double fac = kCon2;
    for (int c = 1; c <= r; ++c) {
      table[c][r] = (table[c - 1][r] * fac - table[c - 1][r - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double e = std::max(std::abs(table[c][r] - table[c - 1][r]), std::abs(table[c][r] - table[c - 1][r - 1]));
      if (e <= err) {
        err = e;
        best = table[c][r];
      }
    }
    if (std::abs(table[r][r] - table[r - 1][r - 1]) >= 2.0 * err) break;
  }
  return best;
}

}  // namespace

GradientReport check_gradient(const UnconstrainedTarget& target, const Vector& x,
                              const GradientCheckOptions& options) {
  GradientReport report;
  const Eigen::Index n = target.dim();
  Vector grad(n);
  target.log_density_gradient(x, grad);
  report.analytic.assign(grad.data(), grad.data() + n);
  report.numeric.assign(n, 0.0);
  report.rel_error.assign(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = options.initial_step * std::max(1.0, std::abs(x(i)));
    double num = 0.0;
    try {
      num = ridders_derivative(target, x, i, h);
    } catch (const Error& e) {
      report.failures.push_back("coordinate " + std::to_string(i) + ": " + e.what());
      report.rel_error[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    report.numeric[i] = num;
    const double a = grad(i);
    const double denom = std::max({std::abs(a), std::abs(num), options.scale_floor});
    report.rel_error[i] = std::abs(a - num) / denom;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (report.worst_index < 0 || report.rel_error[i] > report.max_rel_error) {
      report.max_rel_error = report.rel_error[i];
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace polar
