// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels.  Every vector variant is tested against these.

#include <cmath>

#include "polar/kernels.hpp"

namespace polar::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sq_norm_scalar(const double* m, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * m[i] * m[i];
  return s;
}

void scaled_drift_scalar(double eps, const double* w, const double* m, double* q, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) q[i] += eps * w[i] * m[i];
}

void ar1_innovations_scalar(const double* x, double phi, std::size_t n, double* ss, double* cross) {
  double s = 0.0, c = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double e = x[t] - phi * x[t - 1];
    s += e * e;
    c += e * x[t - 1];
  }
  *ss = s;
  *cross = c;
}

void ar1_innovation_grad_scalar(const double* x, double phi, double* out, std::size_t n) {
  if (n == 0) return;
  out[0] = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double e = x[t] - phi * x[t - 1];
    out[t] = 2.0 * e;
    out[t - 1] -= 2.0 * phi * e;
  }
}

constexpr KernelTable kScalarTable{
    Backend::kScalar,         dot_scalar,
    axpy_scalar,              weighted_sq_norm_scalar,
    scaled_drift_scalar,      ar1_innovations_scalar,
    ar1_innovation_grad_scalar,
};

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept { return kScalarTable; }
}  // namespace detail

}  // namespace polar::kernels
