// SPDX-License-Identifier: Apache-2.0
#pragma once

// Probit network eigenmodel: P(y_ij = 1) = Phi(c + (Q Lambda Q^T)_ij), with
// Q uniform on V(k, p), lambda_j ~ N(0, p), c ~ N(0, 100).  Q is expanded as
// the polar factor of an unconstrained p x k matrix X with iid N(0, 1) prior.

#include "polar/distributions.hpp"
#include "polar/expansion.hpp"

namespace polar {

namespace probit {
/// log Phi(eta), accurate in both tails.
double log_cdf(double eta);
/// d/deta log Phi(eta) = phi(eta) / Phi(eta).
double d_log_cdf(double eta);
/// (1 - Phi(x)) / phi(x) for x >= 0 via its continued fraction.
double mills_ratio(double x);
}  // namespace probit

/// Symmetric binary adjacency; the diagonal is ignored.
struct EigenmodelData {
  Matrix y;

  int p() const { return static_cast<int>(y.rows()); }
  /// Throws IngestionError naming the first non-binary or asymmetric cell.
  static EigenmodelData from_matrix(Matrix y);
};

struct EigenmodelParams {
  double c = 0.0;
  Matrix x;
  Vector lambda;
};

/// Flat layout: [c, vec(X) column-major, lambda].
Vector pack(const EigenmodelParams& params);
EigenmodelParams unpack_eigenmodel(const Vector& flat, int p, int k);

class EigenmodelTarget final : public UnconstrainedTarget {
 public:
  explicit EigenmodelTarget(EigenmodelData data, int k = 3, PolarVjpFn vjp = nullptr);

  Eigen::Index dim() const override { return 1 + static_cast<Eigen::Index>(p_) * k_ + k_; }
  double log_density_gradient(const Vector& x, Vector& grad) const override;

  int p() const { return p_; }
  int k() const { return k_; }
  const EigenmodelData& data() const { return data_; }

 private:
  EigenmodelData data_;
  int p_, k_;
  PolarVjpFn vjp_;
};

EigenmodelTarget eigenmodel_target(EigenmodelData data, int k = 3);

/// y_ij ~ Bernoulli(Phi(c + (Q diag(lambda) Q^T)_ij)) for i > j, symmetrized,
/// zero diagonal.
EigenmodelData simulate_eigenmodel(int p, double c, const StiefelPoint& q, const Vector& lambda, Rng& rng);

}  // namespace polar
