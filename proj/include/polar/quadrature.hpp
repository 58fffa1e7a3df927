// SPDX-License-Identifier: Apache-2.0
#pragma once

// Numerical integration helpers used by the self-checks: fixed Gauss-Legendre
// rules (tensorised for 2-D) and adaptive Gauss-Kronrod for 1-D integrands.

#include <functional>
#include <vector>

namespace polar::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b] (Golub-Welsch).
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
Rule composite_gauss_legendre(int order, int panels, double a, double b);

/// Adaptive Gauss-Kronrod (15-point) on [a, b]; b may be +infinity.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Tensor-product integral of f over [ax, bx] x [ay, by].
double integrate_2d(const std::function<double(double, double)>& f, const Rule& rx, const Rule& ry);

}  // namespace polar::quad
