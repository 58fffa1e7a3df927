// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bayesian functional PCA:  Y = U D V^T + sigma E Omega(phi)^{1/2}.
//
// Each row of the residual (one unit's series over the grid) is AR(1) with
// lag-one correlation phi and marginal variance sigma^2.  V | rho ~ MACG(K(rho))
// with a squared-exponential K, 1/rho ~ Ga(alpha, beta), U uniform, phi
// arcsine, 1/sigma^2 ~ Ga(nu/2, nu s^2/2), d_i iid half-normal(tau^2).
// U and V are polar factors of unconstrained X_U (n x k) and X_V (p x k);
// positive and interval parameters are mapped to R by log / atanh.

#include <vector>

#include "polar/distributions.hpp"
#include "polar/expansion.hpp"

namespace polar {

/// Prior mean and sd of the length-scale rho, in grid units (days).
inline constexpr double kRhoPriorMean = 365.0 / (4.0 * 3.14159265358979323846);
inline constexpr double kRhoPriorSd = 5.0;

/// Subtracts row means then column means.
Matrix double_center(const Matrix& y);

struct FpcaData {
  Matrix y_raw;
  Matrix y;
  std::vector<double> grid;

  Eigen::Index n() const { return y.rows(); }
  Eigen::Index p() const { return y.cols(); }
  /// Validates the grid against the column count and double-centers.
  static FpcaData from_raw(Matrix y_raw, std::vector<double> grid);
};

struct FpcaHyper {
  int k = 3;
  double nu = 1.0;
  double s2 = 1.0;
  double tau2 = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double nugget = 1e-6;
  /// Residual variance of the rank-k truncation; s2 = 3 * sigma2_hat.
  double sigma2_hat = 0.0;
  /// Set when the residual variance was zero and s2 was floored.
  bool zero_residual = false;
};

/// (alpha, beta) of an inverse gamma with the given mean and sd.
std::pair<double, double> invgamma_from_moments(double mean, double sd);

FpcaHyper fpca_empirical_bayes(const Matrix& y, int k, double nugget = 1e-6);

struct FpcaParams {
  Matrix x_u;
  Matrix x_v;
  Vector eta_d;
  double eta_sigma = 0.0;
  double eta_phi = 0.0;
  double eta_rho = 0.0;
};

/// Flat layout: [vec(X_U), vec(X_V), eta_d, eta_sigma, eta_phi, eta_rho].
Vector pack(const FpcaParams& params);
FpcaParams unpack_fpca(const Vector& flat, Eigen::Index n, Eigen::Index p, int k);

/// Constrained quantities decoded from a flat state.
struct FpcaState {
  Matrix u;
  Matrix v;
  Vector d;
  double sigma2 = 0.0;
  double phi = 0.0;
  double rho = 0.0;
};

/// log(1 - tanh(e)^2), stable for large |e|.
double log_one_minus_tanh2(double e);

class FpcaTarget final : public UnconstrainedTarget {
 public:
  FpcaTarget(FpcaData data, FpcaHyper hyper, PolarVjpFn vjp = nullptr);

  Eigen::Index dim() const override { return (n_ + p_) * k_ + k_ + 3; }
  double log_density_gradient(const Vector& x, Vector& grad) const override;

  FpcaState decode(const Vector& x) const;
  const FpcaData& data() const { return data_; }
  const FpcaHyper& hyper() const { return hyper_; }

 private:
  FpcaData data_;
  FpcaHyper hyper_;
  Eigen::Index n_, p_;
  int k_;
  PolarVjpFn vjp_;
  Matrix sq_dist_;  // (t_i - t_j)^2
};

FpcaTarget fpca_target(FpcaData data, FpcaHyper hyper);

/// Running elementwise mean of equally-shaped matrices.
class RunningMean {
 public:
  void add(const Matrix& m);
  const Matrix& mean() const { return mean_; }
  long count() const { return count_; }

 private:
  Matrix mean_;
  long count_ = 0;
};

/// Leading k right singular vectors of the posterior mean of U D V^T.
Matrix fpca_point_estimate_V(const Matrix& mean_udvt, int k);

/// Largest principal angle (degrees) between the column spans of a and b.
double principal_angle_degrees(const Matrix& a, const Matrix& b);

/// Sign changes along a series (exact zeros are skipped).
int zero_crossings(const Eigen::Ref<const Vector>& series);

struct SimulatedFpca {
  FpcaData data;
  Matrix u;
  Matrix v;
  Vector d;
  /// double_center(U D V^T): the noiseless signal after preprocessing.
  Matrix centered_signal;
};

SimulatedFpca simulate_fpca(Eigen::Index n, std::vector<double> grid, int k, const Vector& d, double sigma2,
                            double phi, double rho, Rng& rng, double nugget = 1e-6);

}  // namespace polar
