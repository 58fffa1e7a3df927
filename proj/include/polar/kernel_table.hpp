// SPDX-License-Identifier: Apache-2.0
#pragma once

// Kept free of standard-library templates: it is included from translation
// units compiled with ISA flags (-mavx2 etc.), which must not emit inline
// definitions that could be shared with baseline code.

#include <cstddef>

namespace polar::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

/// Raw function table for one backend.  All pointers take contiguous
/// double arrays of length n; outputs may not alias inputs unless noted.
struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i w_i * m_i^2
  double (*weighted_sq_norm)(const double* m, const double* w, std::size_t n);
  // q_i += eps * w_i * m_i
  void (*scaled_drift)(double eps, const double* w, const double* m, double* q, std::size_t n);
  // sum_{t>=1} (x_t - phi x_{t-1})^2 and sum_{t>=1} (x_t - phi x_{t-1}) x_{t-1}
  void (*ar1_innovations)(const double* x, double phi, std::size_t n, double* ss, double* cross);
  // out_t = d/dx_t sum_{t>=1} (x_t - phi x_{t-1})^2
  void (*ar1_innovation_grad)(const double* x, double phi, double* out, std::size_t n);
};

}  // namespace polar::kernels
