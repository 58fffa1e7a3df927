// SPDX-License-Identifier: Apache-2.0
//
// NEON kernels (aarch64, two doubles per register).  Advanced SIMD is
// mandatory on aarch64 so no runtime check is needed beyond the build target.

#include <arm_neon.h>

#include "polar/kernel_table.hpp"

namespace polar::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sq_norm_neon(const double* m, const double* w, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vm = vld1q_f64(m + i);
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vm), vm);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * m[i] * m[i];
  return s;
}

void scaled_drift_neon(double eps, const double* w, const double* m, double* q, std::size_t n) {
  const float64x2_t ve = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t step = vmulq_f64(ve, vld1q_f64(w + i));
    vst1q_f64(q + i, vfmaq_f64(vld1q_f64(q + i), step, vld1q_f64(m + i)));
  }
  for (; i < n; ++i) q[i] += eps * w[i] * m[i];
}

void ar1_innovations_neon(const double* x, double phi, std::size_t n, double* ss, double* cross) {
  const float64x2_t vphi = vdupq_n_f64(phi);
  float64x2_t acc_s = vdupq_n_f64(0.0);
  float64x2_t acc_c = vdupq_n_f64(0.0);
  std::size_t t = 1;
  for (; t + 2 <= n; t += 2) {
    const float64x2_t cur = vld1q_f64(x + t);
    const float64x2_t prev = vld1q_f64(x + t - 1);
    const float64x2_t e = vfmsq_f64(cur, vphi, prev);
    acc_s = vfmaq_f64(acc_s, e, e);
    acc_c = vfmaq_f64(acc_c, e, prev);
  }
  double s = vaddvq_f64(acc_s);
  double c = vaddvq_f64(acc_c);
  for (; t < n; ++t) {
    const double e = x[t] - phi * x[t - 1];
    s += e * e;
    c += e * x[t - 1];
  }
  *ss = s;
  *cross = c;
}

void ar1_innovation_grad_neon(const double* x, double phi, double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  const float64x2_t vphi = vdupq_n_f64(phi);
  const float64x2_t two = vdupq_n_f64(2.0);
  const float64x2_t two_phi = vdupq_n_f64(2.0 * phi);
  out[0] = -2.0 * phi * (x[1] - phi * x[0]);
  std::size_t t = 1;
  for (; t + 2 < n; t += 2) {
    const float64x2_t prev = vld1q_f64(x + t - 1);
    const float64x2_t cur = vld1q_f64(x + t);
    const float64x2_t next = vld1q_f64(x + t + 1);
    const float64x2_t e_cur = vfmsq_f64(cur, vphi, prev);
    const float64x2_t e_next = vfmsq_f64(next, vphi, cur);
    vst1q_f64(out + t, vfmsq_f64(vmulq_f64(two, e_cur), two_phi, e_next));
  }
  for (; t + 1 < n; ++t) {
    const double e_cur = x[t] - phi * x[t - 1];
    const double e_next = x[t + 1] - phi * x[t];
    out[t] = 2.0 * e_cur - 2.0 * phi * e_next;
  }
  out[n - 1] = 2.0 * (x[n - 1] - phi * x[n - 2]);
}

constexpr KernelTable kNeonTable{
    Backend::kNeon,         dot_neon,
    axpy_neon,              weighted_sq_norm_neon,
    scaled_drift_neon,      ar1_innovations_neon,
    ar1_innovation_grad_neon,
};

}  // namespace

namespace detail {
const KernelTable* neon_table() noexcept { return &kNeonTable; }
}  // namespace detail

}  // namespace polar::kernels
