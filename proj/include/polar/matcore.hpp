// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense linear-algebra primitives for the polar decomposition X = Q S^{1/2}.
//
// Unconstrained states are plain Eigen matrices (p x k, p >= k).  Values
// with extra invariants are wrapped: StiefelPoint (orthonormal columns) and
// SpdMatrix (symmetric positive definite with a cached Cholesky factor).

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace polar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// ||Q^T Q - I||_F accepted when constructing a StiefelPoint.
inline constexpr double kOrthTol = 1e-10;
/// Smallest admissible d_k / d_1 for the polar decomposition.
inline constexpr double kRankTol = 1e-12;

/// Throws DomainError unless x is p x k with p >= k >= 1 and all finite.
void require_rect(const Matrix& x, const char* what = "matrix");

/// p x k matrix with orthonormal columns.
class StiefelPoint {
 public:
  explicit StiefelPoint(Matrix q, double tol = kOrthTol);

  const Matrix& matrix() const noexcept { return q_; }
  Eigen::Index rows() const noexcept { return q_.rows(); }
  Eigen::Index cols() const noexcept { return q_.cols(); }

  /// ||Q^T Q - I||_F.
  double orthogonality_error() const;

 private:
  Matrix q_;
};

/// Symmetric positive definite matrix with its lower Cholesky factor.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix s);

  const Matrix& matrix() const noexcept { return s_; }
  const Eigen::LLT<Matrix>& cholesky() const noexcept { return llt_; }
  Eigen::Index dim() const noexcept { return s_.rows(); }

  /// log|S| = 2 sum log diag(L).
  double log_det() const;
  /// S^{-1} B.
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  Matrix inverse() const;

 private:
  Matrix s_;
  Eigen::LLT<Matrix> llt_;
};

struct PolarPair {
  StiefelPoint q;
  SpdMatrix s;
};

/// X = U diag(d) V^T with U p x k, d descending, V k x k.
struct ThinSvd {
  Matrix u;
  Vector d;
  Matrix v;
};

ThinSvd thin_svd(const Matrix& x);

/// Q_X = U V^T, S_X = X^T X.  Rank-deficient input throws DegenerateInputError.
PolarPair polar_decompose(const Matrix& x);

/// Orthogonal factor only (no SPD wrapper, no orthogonality re-check).
/// Hot-path variant used inside targets; same rank check as polar_decompose.
Matrix polar_factor(const Matrix& x);
/// As above, reusing an SVD the caller already holds.
Matrix polar_factor(const ThinSvd& svd);

/// Symmetric square root of S, or of S^{-1} when `inverse`.
SpdMatrix sym_sqrt(const SpdMatrix& s, bool inverse = false);

/// log Gamma_k(a) = k(k-1)/4 log(pi) + sum_{j=1..k} log Gamma(a + (1-j)/2).
double log_multigamma(int k, double a);

/// log of the Jacobian factor from X to (Q_X, S_X) for p x k matrices:
/// log Gamma_k(p/2) - (pk/2) log(pi) - ((p-k-1)/2) log|S|.
double log_polar_jacobian(const SpdMatrix& s, int p);

}  // namespace polar
