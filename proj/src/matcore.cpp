// SPDX-License-Identifier: Apache-2.0

#include "polar/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "polar/errors.hpp"

namespace polar {

void require_rect(const Matrix& x, const char* what) {
  if (x.cols() < 1 || x.rows() < x.cols()) {
    std::ostringstream msg;
    msg << what << ": expected p x k with p >= k >= 1, got " << x.rows() << " x " << x.cols();
    throw DomainError(msg.str());
  }
  if (!x.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
}

StiefelPoint::StiefelPoint(Matrix q, double tol) : q_(std::move(q)) {
  require_rect(q_, "StiefelPoint");
  const double err = orthogonality_error();
  if (!(err <= tol)) {
    std::ostringstream msg;
    msg << "StiefelPoint: ||Q^T Q - I||_F = " << err << " exceeds " << tol;
    throw DomainError(msg.str());
  }
}

double StiefelPoint::orthogonality_error() const {
  const Eigen::Index k = q_.cols();
  return (q_.transpose() * q_ - Matrix::Identity(k, k)).norm();
}

SpdMatrix::SpdMatrix(Matrix s) : s_(std::move(s)) {
  if (s_.rows() != s_.cols() || s_.rows() == 0) throw DomainError("SpdMatrix: matrix must be square and non-empty");
  if (!s_.allFinite()) throw DomainError("SpdMatrix: non-finite entry");
  const double asym = (s_ - s_.transpose()).norm();
  if (asym > 1e-12 * s_.norm()) {
    std::ostringstream msg;
    msg << "SpdMatrix: asymmetry ||S - S^T||_F = " << asym;
    throw DomainError(msg.str());
  }
  llt_.compute(s_);
  if (llt_.info() != Eigen::Success) throw NumericalError("SpdMatrix: Cholesky factorization failed (not positive definite)");
  const auto diag = llt_.matrixLLT().diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw NumericalError("SpdMatrix: non-positive Cholesky pivot");
  }
}

double SpdMatrix::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix SpdMatrix::inverse() const {
  return llt_.solve(Matrix::Identity(dim(), dim()));
}

ThinSvd thin_svd(const Matrix& x) {
  require_rect(x, "thin_svd");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("thin_svd: Jacobi SVD did not converge", static_cast<int>(x.cols() * x.cols()));
  }
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

namespace {

void require_full_rank(const Vector& d) {
  const double d1 = d(0);
  const double dk = d(d.size() - 1);
  if (!(d1 > 0.0) || !(dk >= kRankTol * d1)) {
    std::ostringstream msg;
    msg << "polar decomposition: rank-deficient input, d_k/d_1 = " << (d1 > 0.0 ? dk / d1 : 0.0);
    throw DegenerateInputError(msg.str());
  }
}

}  // namespace

Matrix polar_factor(const ThinSvd& svd) {
  require_full_rank(svd.d);
  return svd.u * svd.v.transpose();
}

Matrix polar_factor(const Matrix& x) { return polar_factor(thin_svd(x)); }

PolarPair polar_decompose(const Matrix& x) {
  const ThinSvd svd = thin_svd(x);
  require_full_rank(svd.d);
  Matrix s = x.transpose() * x;
  s = 0.5 * (s + s.transpose()).eval();
  return PolarPair{StiefelPoint(svd.u * svd.v.transpose()), SpdMatrix(std::move(s))};
}

SpdMatrix sym_sqrt(const SpdMatrix& s, bool inverse) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix());
  if (eig.info() != Eigen::Success) throw NumericalError("sym_sqrt: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (!(lambda.minCoeff() > 1e-14 * lmax)) {
    std::ostringstream msg;
    msg << "sym_sqrt: ill-conditioned input, eigenvalue ratio " << lambda.minCoeff() / lmax;
    throw NumericalError(msg.str());
  }
  const Vector root = inverse ? Vector(lambda.array().rsqrt()) : Vector(lambda.array().sqrt());
  Matrix r = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  r = 0.5 * (r + r.transpose()).eval();
  return SpdMatrix(std::move(r));
}

double log_multigamma(int k, double a) {
  if (k < 1) throw DomainError("log_multigamma: order must be >= 1");
  if (!(a > 0.5 * (k - 1))) {
    std::ostringstream msg;
    msg << "log_multigamma: a = " << a << " must exceed (k-1)/2 = " << 0.5 * (k - 1);
    throw DomainError(msg.str());
  }
  double out = 0.25 * k * (k - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= k; ++j) out += boost::math::lgamma(a + 0.5 * (1 - j));
  return out;
}

double log_polar_jacobian(const SpdMatrix& s, int p) {
  const int k = static_cast<int>(s.dim());
  if (p < k) throw DomainError("log_polar_jacobian: requires p >= k");
  return log_multigamma(k, 0.5 * p) - 0.5 * p * k * std::log(std::numbers::pi) -
         0.5 * (p - k - 1) * s.log_det();
}

}  // namespace polar
