// SPDX-License-Identifier: Apache-2.0
#pragma once

// Densities and exact samplers on the Stiefel manifold, plus the scalar and
// Gaussian building blocks used by the application models.

#include <random>
#include <span>
#include <vector>

#include "polar/matcore.hpp"

namespace polar {

using Rng = std::mt19937_64;

/// Matrix of iid N(0, 1) entries.
Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Uniform draw on V(k, p): polar factor of a p x k standard normal matrix.
StiefelPoint sample_uniform_stiefel(int p, int k, Rng& rng);

/// Row covariance of the matrix angular central Gaussian.
struct MacgParams {
  SpdMatrix sigma;
};

/// log density of MACG(Sigma) with respect to the uniform probability
/// measure on V(k, p): -(k/2) log|Sigma| - (p/2) log|Q^T Sigma^{-1} Q|.
double log_macg_density(const StiefelPoint& q, const MacgParams& params);
/// d/dQ of the above with Q's entries treated as free: -p Sigma^{-1} Q (Q^T Sigma^{-1} Q)^{-1}.
Matrix log_macg_density_grad(const Matrix& q, const MacgParams& params);

/// X = L Z with Sigma = L L^T and Z iid normal (p x k).
Matrix sample_matrix_normal(const SpdMatrix& sigma, int k, Rng& rng);
StiefelPoint sample_macg(const MacgParams& params, int k, Rng& rng);

/// log N_{p,k}(X | 0, Sigma, I), via Cholesky solves.
double log_matrix_normal(const Matrix& x, const SpdMatrix& sigma);

/// Squared-exponential covariance on a 1-D grid:
/// K_ij = exp(-(t_i - t_j)^2 / rho^2) + nugget * [i == j].
struct SeKernelParams {
  std::vector<double> grid;
  double rho = 1.0;
  double nugget = 1e-6;
};

/// Raw kernel matrix without factorization or validation of positivity.
Matrix se_kernel_matrix(std::span<const double> grid, double rho, double nugget);
SpdMatrix se_kernel(const SeKernelParams& params);

/// AR(1) with lag-one correlation phi and marginal variance sigma2;
/// covariance sigma2 * Omega(phi), Omega_ij = phi^|i-j|.
struct Ar1Params {
  double phi = 0.0;
  double sigma2 = 1.0;
};

/// Gaussian log density of one series under sigma2 * Omega(phi), evaluated
/// in O(p) through the Markov factorization.
double ar1_loglik(std::span<const double> row, const Ar1Params& params);

/// Arcsine density on (-1, 1): 1 / (pi sqrt(1 - phi^2)).
double log_arcsine(double phi);
/// Inverse-gamma density with shape alpha and scale beta.
double log_invgamma(double x, double alpha, double beta);
/// N(0, tau2) restricted to d > 0.
double log_halfnormal(double d, double tau2);

}  // namespace polar
