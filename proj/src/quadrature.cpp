// SPDX-License-Identifier: Apache-2.0

#include "polar/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "polar/errors.hpp"

namespace polar::quad {

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  // Jacobi matrix of the Legendre recurrence.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double beta = i / std::sqrt(4.0 * i * i - 1.0);
    jac(i, i - 1) = beta;
    jac(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    r.nodes[i] = mid + half * eig.eigenvalues()(i);
    r.weights[i] = 2.0 * v0 * v0 * half;
  }
  return r;
}

Rule composite_gauss_legendre(int order, int panels, double a, double b) {
  Rule out;
  const double h = (b - a) / panels;
  for (int j = 0; j < panels; ++j) {
    const Rule r = gauss_legendre(order, a + j * h, a + (j + 1) * h);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, tol, &err);
}

double integrate_2d(const std::function<double(double, double)>& f, const Rule& rx, const Rule& ry) {
  double total = 0.0;
  for (std::size_t i = 0; i < rx.nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ry.nodes.size(); ++j) row += ry.weights[j] * f(rx.nodes[i], ry.nodes[j]);
    total += rx.weights[i] * row;
  }
  return total;
}

}  // namespace polar::quad
