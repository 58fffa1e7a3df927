// SPDX-License-Identifier: Apache-2.0
#pragma once

// Polar expansion: a density on the Stiefel manifold V(k, p) is turned into
// a density on unconstrained p x k matrices X whose polar factor Q_X has the
// requested law.  Gradients are pulled back through Q_X = U V^T analytically.
//
// Flat state vectors map to X in column-major order (x[i + p*j] = X(i, j)).

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "polar/matcore.hpp"

namespace polar {

/// Differentiable log density over R^dim, the contract the sampler consumes.
/// Implementations must be safe to evaluate concurrently from several threads.
class UnconstrainedTarget {
 public:
  virtual ~UnconstrainedTarget() = default;
  virtual Eigen::Index dim() const = 0;
  /// Log density up to an additive constant; writes the gradient into grad.
  /// Throws DegenerateInputError when x maps onto a singular polar factor.
  virtual double log_density_gradient(const Vector& x, Vector& grad) const = 0;
  virtual double log_density(const Vector& x) const;
};

/// Log density of Q on V(k, p) (w.r.t. the uniform measure, up to a constant)
/// and its partials with Q's entries treated as free coordinates.
class StiefelTarget {
 public:
  virtual ~StiefelTarget() = default;
  virtual int p() const = 0;
  virtual int k() const = 0;
  virtual double log_density_gradient(const Matrix& q, Matrix& grad) const = 0;
  virtual double log_density(const Matrix& q) const;
};

/// Adapter for lambdas; handy for tests and small targets.
class FunctionTarget final : public UnconstrainedTarget {
 public:
  using Fn = std::function<double(const Vector&, Vector&)>;
  FunctionTarget(Eigen::Index dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  Eigen::Index dim() const override { return dim_; }
  double log_density_gradient(const Vector& x, Vector& grad) const override { return fn_(x, grad); }

 private:
  Eigen::Index dim_;
  Fn fn_;
};

class FunctionStiefelTarget final : public StiefelTarget {
 public:
  using Fn = std::function<double(const Matrix&, Matrix&)>;
  FunctionStiefelTarget(int p, int k, Fn fn) : p_(p), k_(k), fn_(std::move(fn)) {}
  int p() const override { return p_; }
  int k() const override { return k_; }
  double log_density_gradient(const Matrix& q, Matrix& grad) const override { return fn_(q, grad); }

 private:
  int p_, k_;
  Fn fn_;
};

/// Vector-Jacobian product of X -> Q_X: given G = df/dQ at Q_X, returns df/dX.
///
/// With X = U D V^T, the in-span part solves the antisymmetric Sylvester
/// system with denominators d_i + d_j and the complement contributes
/// (I - U U^T) G V D^{-1} V^T.  Requires min(d_i + d_j) > 1e-10 d_1.
Matrix polar_vjp(const Matrix& x, const Matrix& g);
Matrix polar_vjp(const ThinSvd& svd, const Matrix& g);

/// Signature shared by polar_vjp and test doubles of it.
using PolarVjpFn = Matrix (*)(const ThinSvd&, const Matrix&);

/// Wishart(I_k, p) conditional: log f_X = -||X||_F^2 / 2 + log f_Q(Q_X).
class GeneralExpansion final : public UnconstrainedTarget {
 public:
  explicit GeneralExpansion(std::shared_ptr<const StiefelTarget> target, PolarVjpFn vjp = nullptr);
  Eigen::Index dim() const override { return static_cast<Eigen::Index>(p_) * k_; }
  double log_density_gradient(const Vector& x, Vector& grad) const override;
  /// The dropped constant -(pk/2) log(2 pi); adding it normalizes the
  /// density whenever f_Q is normalized.
  double log_constant() const;

 private:
  std::shared_ptr<const StiefelTarget> target_;
  int p_, k_;
  PolarVjpFn vjp_;
};

GeneralExpansion expand_general(std::shared_ptr<const StiefelTarget> target);

/// Posterior under an MACG(Sigma) prior:
/// log f_X = loglik(Q_X) + log N_{p,k}(X | 0, Sigma, I).
class MacgPosteriorExpansion final : public UnconstrainedTarget {
 public:
  MacgPosteriorExpansion(std::shared_ptr<const StiefelTarget> loglik, SpdMatrix sigma, PolarVjpFn vjp = nullptr);
  Eigen::Index dim() const override { return static_cast<Eigen::Index>(p_) * k_; }
  double log_density_gradient(const Vector& x, Vector& grad) const override;

 private:
  std::shared_ptr<const StiefelTarget> loglik_;
  SpdMatrix sigma_;
  int p_, k_;
  PolarVjpFn vjp_;
};

MacgPosteriorExpansion expand_macg_posterior(std::shared_ptr<const StiefelTarget> loglik, SpdMatrix sigma);

struct GradientReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> rel_error;
  /// Coordinates whose evaluation threw (e.g. stepped onto a singular X).
  std::vector<std::string> failures;
};

struct GradientCheckOptions {
  /// Initial Ridders step relative to max(1, |x_i|).
  double initial_step = 0.01;
  /// Floor on the denominator of the relative error.
  double scale_floor = 1e-3;
};

/// Compares target gradient against Ridders-extrapolated central differences.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, scale_floor).
GradientReport check_gradient(const UnconstrainedTarget& target, const Vector& x,
                              const GradientCheckOptions& options = {});

}  // namespace polar
