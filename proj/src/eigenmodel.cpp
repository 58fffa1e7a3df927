// SPDX-License-Identifier: Apache-2.0

#include "polar/eigenmodel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "polar/errors.hpp"

namespace polar {

namespace probit {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
// Below this the erfc route loses relative accuracy / underflows.
constexpr double kTailSwitch = -8.0;
}  // namespace

double mills_ratio(double x) {
  if (x < 0.0) throw DomainError("mills_ratio: requires x >= 0");
  if (x < 6.0) {
    const double sf = 0.5 * std::erfc(x / std::numbers::sqrt2);
    return sf * std::exp(0.5 * x * x + kHalfLog2Pi);
  }
  // R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated from the tail.
  double t = x;
  for (int j = 80; j >= 1; --j) t = x + j / t;
  return 1.0 / t;
}

double log_cdf(double eta) {
  if (eta < kTailSwitch) return -0.5 * eta * eta - kHalfLog2Pi + std::log(mills_ratio(-eta));
  if (eta > 0.0) return std::log1p(-0.5 * std::erfc(eta / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(-eta / std::numbers::sqrt2));
}

double d_log_cdf(double eta) {
  if (eta < kTailSwitch) return 1.0 / mills_ratio(-eta);
  const double pdf = std::exp(-0.5 * eta * eta - kHalfLog2Pi);
  return pdf / (0.5 * std::erfc(-eta / std::numbers::sqrt2));
}

}  // namespace probit

EigenmodelData EigenmodelData::from_matrix(Matrix y) {
  if (y.rows() != y.cols() || y.rows() < 2) throw IngestionError("adjacency: expected a square matrix with p >= 2");
  const Eigen::Index p = y.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double v = y(i, j);
      if (v != 0.0 && v != 1.0) {
        std::ostringstream msg;
        msg << "adjacency: cell (" << i + 1 << ", " << j + 1 << ") = " << v << " is not 0 or 1";
        throw IngestionError(msg.str());
      }
      if (i != j && y(j, i) != v) {
        std::ostringstream msg;
        msg << "adjacency: not symmetric at cell (" << i + 1 << ", " << j + 1 << ")";
        throw IngestionError(msg.str());
      }
    }
  }
  return EigenmodelData{std::move(y)};
}

Vector pack(const EigenmodelParams& params) {
  const Eigen::Index pk = params.x.size();
  Vector flat(1 + pk + params.lambda.size());
  flat(0) = params.c;
  flat.segment(1, pk) = Eigen::Map<const Vector>(params.x.data(), pk);
  flat.tail(params.lambda.size()) = params.lambda;
  return flat;
}

EigenmodelParams unpack_eigenmodel(const Vector& flat, int p, int k) {
  if (flat.size() != 1 + static_cast<Eigen::Index>(p) * k + k) throw DomainError("eigenmodel: flat vector has the wrong size");
  EigenmodelParams out;
  out.c = flat(0);
  out.x = Eigen::Map<const Matrix>(flat.data() + 1, p, k);
  out.lambda = flat.tail(k);
  return out;
}

EigenmodelTarget::EigenmodelTarget(EigenmodelData data, int k, PolarVjpFn vjp)
    : data_(std::move(data)), p_(data_.p()), k_(k), vjp_(vjp ? vjp : static_cast<PolarVjpFn>(&polar_vjp)) {
  if (k_ < 1 || k_ > p_) throw DomainError("eigenmodel: need 1 <= k <= p");
}

double EigenmodelTarget::log_density_gradient(const Vector& x, Vector& grad) const {
  if (x.size() != dim()) throw DomainError("eigenmodel: state vector has the wrong dimension");
  const double c = x(0);
  const Eigen::Map<const Matrix> xm(x.data() + 1, p_, k_);
  const Vector lambda = x.tail(k_);

  const ThinSvd svd = thin_svd(xm);
  const Matrix q = polar_factor(svd);
  const Matrix q_lambda = q * lambda.asDiagonal();
  const Matrix latent = q_lambda * q.transpose();

  // w(i, j) = d loglik / d eta_ij for i > j, mirrored; zero diagonal.
  Matrix w = Matrix::Zero(p_, p_);
  double loglik = 0.0;
  double grad_c = 0.0;
  for (int j = 0; j < p_; ++j) {
    for (int i = j + 1; i < p_; ++i) {
      const double eta = c + latent(i, j);
      double wij;
      if (data_.y(i, j) != 0.0) {
        loglik += probit::log_cdf(eta);
        wij = probit::d_log_cdf(eta);
      } else {
        loglik += probit::log_cdf(-eta);
        wij = -probit::d_log_cdf(-eta);
      }
      w(i, j) = wij;
      w(j, i) = wij;
      grad_c += wij;
    }
  }

  const double pd = static_cast<double>(p_);
  const double logp = loglik - c * c / 200.0 - 0.5 * xm.squaredNorm() - lambda.squaredNorm() / (2.0 * pd);

  const Matrix wq = w * q;
  // d/dQ of sum_{i>j} loglik_ij = W Q Lambda (W symmetric).
  const Matrix grad_q = wq * lambda.asDiagonal();
  const Matrix grad_x = -xm + vjp_(svd, grad_q);

  grad.resize(dim());
  grad(0) = grad_c - c / 100.0;
  grad.segment(1, static_cast<Eigen::Index>(p_) * k_) = Eigen::Map<const Vector>(grad_x.data(), grad_x.size());
  for (int j = 0; j < k_; ++j) grad(1 + p_ * k_ + j) = 0.5 * q.col(j).dot(wq.col(j)) - lambda(j) / pd;
  return logp;
}

EigenmodelTarget eigenmodel_target(EigenmodelData data, int k) { return EigenmodelTarget(std::move(data), k); }

EigenmodelData simulate_eigenmodel(int p, double c, const StiefelPoint& q, const Vector& lambda, Rng& rng) {
  if (q.rows() != p || q.cols() != lambda.size()) throw DomainError("simulate_eigenmodel: Q must be p x k with k = len(lambda)");
  const Matrix latent = q.matrix() * lambda.asDiagonal() * q.matrix().transpose();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix y = Matrix::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = j + 1; i < p; ++i) {
      const double prob = std::exp(probit::log_cdf(c + latent(i, j)));
      const double v = u(rng) < prob ? 1.0 : 0.0;
      y(i, j) = v;
      y(j, i) = v;
    }
  }
  return EigenmodelData{std::move(y)};
}

}  // namespace polar
