// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops used by the sampler and the model likelihoods.
//
// Each kernel has a scalar reference implementation plus vector variants
// (AVX2+FMA on x86-64, NEON on aarch64).  The variant is chosen once at
// startup from the CPU feature bits; POLAR_SIMD=scalar|avx2|neon overrides
// the choice.  Variants agree with the scalar reference to rounding, not
// bit-for-bit, because reductions are reassociated.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "polar/kernel_table.hpp"

namespace polar::kernels {

std::string_view backend_name(Backend b) noexcept;

/// Table selected for this process (CPU detection + POLAR_SIMD override).
const KernelTable& active() noexcept;

/// Every backend this binary was built with and this CPU can execute.
std::vector<Backend> available_backends();

/// Table for a specific backend; throws DomainError if unavailable.
const KernelTable& table_for(Backend b);

// Convenience wrappers over active().

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double weighted_sq_norm(std::span<const double> m, std::span<const double> w) {
  return active().weighted_sq_norm(m.data(), w.data(), m.size());
}

inline void scaled_drift(double eps, std::span<const double> w, std::span<const double> m,
                         std::span<double> q) {
  active().scaled_drift(eps, w.data(), m.data(), q.data(), q.size());
}

struct Ar1Innovations {
  double ss = 0.0;
  double cross = 0.0;
};

inline Ar1Innovations ar1_innovations(std::span<const double> x, double phi) {
  Ar1Innovations r;
  active().ar1_innovations(x.data(), phi, x.size(), &r.ss, &r.cross);
  return r;
}

inline void ar1_innovation_grad(std::span<const double> x, double phi, std::span<double> out) {
  active().ar1_innovation_grad(x.data(), phi, out.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;
}  // namespace detail

}  // namespace polar::kernels
