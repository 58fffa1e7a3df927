// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "polar/errors.hpp"
#include "polar/kernels.hpp"

namespace polar::kernels {

namespace detail {
#ifndef POLAR_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif
#ifndef POLAR_HAVE_NEON
const KernelTable* neon_table() noexcept { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() noexcept {
#if defined(POLAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* usable(Backend b) noexcept {
  switch (b) {
    case Backend::kScalar:
      return &detail::scalar_table();
    case Backend::kAvx2:
      return cpu_has_avx2() ? detail::avx2_table() : nullptr;
    case Backend::kNeon:
      return detail::neon_table();
  }
  return nullptr;
}

const KernelTable& select() noexcept {
  if (const char* env = std::getenv("POLAR_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
      if (want == backend_name(b)) {
        if (const KernelTable* t = usable(b)) return *t;
      }
    }
  }
  for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
    if (const KernelTable* t = usable(b)) return *t;
  }
  return detail::scalar_table();
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (usable(b)) out.push_back(b);
  }
  return out;
}

const KernelTable& table_for(Backend b) {
  const KernelTable* t = usable(b);
  if (!t) throw DomainError("kernel backend '" + std::string(backend_name(b)) + "' is not available");
  return *t;
}

}  // namespace polar::kernels
