// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "polar/csv.hpp"
#include "polar/distributions.hpp"

namespace testing {

using polar::Matrix;
using polar::Vector;

inline polar::Rng rng_for(std::uint64_t seed) { return polar::Rng(seed); }

inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix reshape(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("polar_test_" + tag + "_" + std::to_string(gen()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << polar::csv::format_double(m(i, j));
    os << "\n";
  }
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

/// Dense oracle: Gaussian log density of x under covariance sigma2 * phi^|i-j|.
inline double dense_ar1_loglik(const Vector& x, double phi, double sigma2) {
  const Eigen::Index p = x.size();
  Matrix cov(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) cov(i, j) = sigma2 * std::pow(phi, std::abs(static_cast<double>(i - j)));
  Eigen::LLT<Matrix> llt(cov);
  const Vector w = llt.matrixL().solve(x);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * static_cast<double>(p) * std::log(2.0 * M_PI) - 0.5 * log_det - 0.5 * w.squaredNorm();
}

/// Q from X (X^T X)^{-1/2} via a self-adjoint eigen solve (independent of the SVD path).
inline Matrix polar_by_eigen(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x);
  const Vector inv_root = eig.eigenvalues().array().rsqrt();
  return x * eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace testing
