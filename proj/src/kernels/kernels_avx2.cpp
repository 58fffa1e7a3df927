// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA kernels.  This file is compiled with -mavx2 -mfma and must only
// be entered after the dispatcher has confirmed CPU support.  It includes
// nothing that carries inline standard-library code.

#include <immintrin.h>

#include "polar/kernel_table.hpp"

namespace polar::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sq_norm_avx2(const double* m, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vm = _mm256_loadu_pd(m + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), vm), vm, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * m[i] * m[i];
  return s;
}

void scaled_drift_avx2(double eps, const double* w, const double* m, double* q, std::size_t n) {
  const __m256d ve = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d step = _mm256_mul_pd(ve, _mm256_loadu_pd(w + i));
    _mm256_storeu_pd(q + i, _mm256_fmadd_pd(step, _mm256_loadu_pd(m + i), _mm256_loadu_pd(q + i)));
  }
  for (; i < n; ++i) q[i] += eps * w[i] * m[i];
}

void ar1_innovations_avx2(const double* x, double phi, std::size_t n, double* ss, double* cross) {
  const __m256d vphi = _mm256_set1_pd(phi);
  __m256d acc_s = _mm256_setzero_pd();
  __m256d acc_c = _mm256_setzero_pd();
  std::size_t t = 1;
  for (; t + 4 <= n; t += 4) {
    const __m256d cur = _mm256_loadu_pd(x + t);
    const __m256d prev = _mm256_loadu_pd(x + t - 1);
    const __m256d e = _mm256_fnmadd_pd(vphi, prev, cur);
    acc_s = _mm256_fmadd_pd(e, e, acc_s);
    acc_c = _mm256_fmadd_pd(e, prev, acc_c);
  }
  double s = hsum(acc_s);
  double c = hsum(acc_c);
  for (; t < n; ++t) {
    const double e = x[t] - phi * x[t - 1];
    s += e * e;
    c += e * x[t - 1];
  }
  *ss = s;
  *cross = c;
}

// out_t = 2 e_t - 2 phi e_{t+1}, with e_0 = e_n = 0.
void ar1_innovation_grad_avx2(const double* x, double phi, double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  const __m256d vphi = _mm256_set1_pd(phi);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d two_phi = _mm256_set1_pd(2.0 * phi);
  out[0] = -2.0 * phi * (x[1] - phi * x[0]);
  std::size_t t = 1;
  // Interior points need x[t-1], x[t], x[t+1].
  for (; t + 4 < n; t += 4) {
    const __m256d prev = _mm256_loadu_pd(x + t - 1);
    const __m256d cur = _mm256_loadu_pd(x + t);
    const __m256d next = _mm256_loadu_pd(x + t + 1);
    const __m256d e_cur = _mm256_fnmadd_pd(vphi, prev, cur);
    const __m256d e_next = _mm256_fnmadd_pd(vphi, cur, next);
    _mm256_storeu_pd(out + t, _mm256_fnmadd_pd(two_phi, e_next, _mm256_mul_pd(two, e_cur)));
  }
  for (; t + 1 < n; ++t) {
    const double e_cur = x[t] - phi * x[t - 1];
    const double e_next = x[t + 1] - phi * x[t];
    out[t] = 2.0 * e_cur - 2.0 * phi * e_next;
  }
  out[n - 1] = 2.0 * (x[n - 1] - phi * x[n - 2]);
}

constexpr KernelTable kAvx2Table{
    Backend::kAvx2,         dot_avx2,
    axpy_avx2,              weighted_sq_norm_avx2,
    scaled_drift_avx2,      ar1_innovations_avx2,
    ar1_innovation_grad_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2Table; }
}  // namespace detail

}  // namespace polar::kernels
