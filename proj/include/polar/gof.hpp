// SPDX-License-Identifier: Apache-2.0
#pragma once

// Goodness-of-fit tests used by the sampler self-checks.

#include <functional>
#include <span>
#include <vector>

namespace polar::gof {

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.  Uses the
/// asymptotic distribution of sqrt(n) D with the Stephens small-sample
/// correction.
TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Pearson chi-square test of observed counts against expected counts.
/// Degrees of freedom = bins - 1 - fitted_params.
TestResult chi_square_test(std::span<const double> observed, std::span<const double> expected, int fitted_params = 0);

/// Upper-tail probability of a chi-square variable.
double chi_square_sf(double x, double dof);

}  // namespace polar::gof
