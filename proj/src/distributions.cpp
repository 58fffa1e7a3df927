// SPDX-License-Identifier: Apache-2.0

#include "polar/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "polar/errors.hpp"
#include "polar/kernels.hpp"

namespace polar {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  // Fill column by column so the draw order is fixed by the storage order.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
  return z;
}

StiefelPoint sample_uniform_stiefel(int p, int k, Rng& rng) {
  if (p < k || k < 1) throw DomainError("sample_uniform_stiefel: requires p >= k >= 1");
  return StiefelPoint(polar_factor(standard_normal_matrix(p, k, rng)));
}

double log_macg_density(const StiefelPoint& q, const MacgParams& params) {
  const Matrix& qm = q.matrix();
  const Eigen::Index p = qm.rows();
  const Eigen::Index k = qm.cols();
  if (params.sigma.dim() != p) throw DomainError("log_macg_density: Sigma dimension does not match Q");
  const Matrix w = params.sigma.cholesky().matrixL().solve(qm);
  const Eigen::LLT<Matrix> inner(w.transpose() * w);
  if (inner.info() != Eigen::Success) throw NumericalError("log_macg_density: Q^T Sigma^{-1} Q not positive definite");
  const double log_inner = 2.0 * inner.matrixLLT().diagonal().array().log().sum();
  return -0.5 * static_cast<double>(k) * params.sigma.log_det() - 0.5 * static_cast<double>(p) * log_inner;
}

Matrix log_macg_density_grad(const Matrix& q, const MacgParams& params) {
  const Eigen::Index p = q.rows();
  const Matrix sinv_q = params.sigma.solve(q);
  const Matrix inner = q.transpose() * sinv_q;
  const Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericalError("log_macg_density_grad: Q^T Sigma^{-1} Q not positive definite");
  return -static_cast<double>(p) * llt.solve(sinv_q.transpose()).transpose();
}

Matrix sample_matrix_normal(const SpdMatrix& sigma, int k, Rng& rng) {
  return sigma.cholesky().matrixL() * standard_normal_matrix(sigma.dim(), k, rng);
}

StiefelPoint sample_macg(const MacgParams& params, int k, Rng& rng) {
  if (params.sigma.dim() < k || k < 1) throw DomainError("sample_macg: requires p >= k >= 1");
  return StiefelPoint(polar_factor(sample_matrix_normal(params.sigma, k, rng)));
}

double log_matrix_normal(const Matrix& x, const SpdMatrix& sigma) {
  const Eigen::Index p = x.rows();
  const Eigen::Index k = x.cols();
  if (sigma.dim() != p) throw DomainError("log_matrix_normal: Sigma must be p x p for p x k X");
  const Matrix w = sigma.cholesky().matrixL().solve(x);
  const double pk = static_cast<double>(p * k);
  return -0.5 * pk * kLog2Pi - 0.5 * static_cast<double>(k) * sigma.log_det() - 0.5 * w.squaredNorm();
}

Matrix se_kernel_matrix(std::span<const double> grid, double rho, double nugget) {
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
  Matrix k(p, p);
  const double inv_rho2 = 1.0 / (rho * rho);
  for (Eigen::Index j = 0; j < p; ++j) {
    k(j, j) = 1.0 + nugget;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double dt = grid[i] - grid[j];
      const double v = std::exp(-dt * dt * inv_rho2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

SpdMatrix se_kernel(const SeKernelParams& params) {
  if (!(params.rho > 0.0)) throw DomainError("se_kernel: rho must be positive");
  if (!(params.nugget >= 0.0)) throw DomainError("se_kernel: nugget must be non-negative");
  if (params.grid.empty()) throw DomainError("se_kernel: empty grid");
  for (std::size_t i = 1; i < params.grid.size(); ++i) {
    if (!(params.grid[i] > params.grid[i - 1])) throw DomainError("se_kernel: grid must be strictly increasing");
  }
  try {
    return SpdMatrix(se_kernel_matrix(params.grid, params.rho, params.nugget));
  } catch (const NumericalError&) {
    std::ostringstream msg;
    msg << "se_kernel: Cholesky failed for rho = " << params.rho << ", nugget = " << params.nugget
        << " on " << params.grid.size() << " points; increase the nugget";
    throw NumericalError(msg.str());
  }
}

double ar1_loglik(std::span<const double> row, const Ar1Params& params) {
  if (!(std::abs(params.phi) < 1.0)) throw DomainError("ar1_loglik: |phi| must be < 1");
  if (!(params.sigma2 > 0.0)) throw DomainError("ar1_loglik: sigma2 must be positive");
  const std::size_t p = row.size();
  if (p == 0) return 0.0;
  const double one_m_phi2 = 1.0 - params.phi * params.phi;
  const kernels::Ar1Innovations inn = kernels::ar1_innovations(row, params.phi);
  const double quad = row[0] * row[0] + inn.ss / one_m_phi2;
  const double pd = static_cast<double>(p);
  return -0.5 * pd * (kLog2Pi + std::log(params.sigma2)) - 0.5 * (pd - 1.0) * std::log(one_m_phi2) -
         0.5 * quad / params.sigma2;
}

double log_arcsine(double phi) {
  if (!(std::abs(phi) < 1.0)) throw DomainError("log_arcsine: |phi| must be < 1");
  return -std::log(std::numbers::pi) - 0.5 * std::log1p(-phi * phi);
}

double log_invgamma(double x, double alpha, double beta) {
  if (!(x > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) throw DomainError("log_invgamma: x, alpha, beta must be positive");
  return alpha * std::log(beta) - boost::math::lgamma(alpha) - (alpha + 1.0) * std::log(x) - beta / x;
}

double log_halfnormal(double d, double tau2) {
  if (!(d > 0.0) || !(tau2 > 0.0)) throw DomainError("log_halfnormal: d and tau2 must be positive");
  return 0.5 * std::log(2.0 / (std::numbers::pi * tau2)) - 0.5 * d * d / tau2;
}

}  // namespace polar
