// SPDX-License-Identifier: Apache-2.0
#pragma once

// Effective sample size, split R-hat and per-parameter posterior summaries.

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "polar/matcore.hpp"

namespace polar {

struct EssResult {
  double ess = 0.0;
  /// Integrated autocorrelation time, N / ess.
  double tau = 0.0;
  /// Largest lag included in the sum (always odd: pairs (0,1), (2,3), ...),
  /// so lag + 1, the number of autocorrelations used, is even.
  int truncation_lag = 0;
  /// Monotone-adjusted pair sums Gamma_m = rho_{2m} + rho_{2m+1}.
  std::vector<double> pair_sums;
  /// Set when the series is constant; ess is reported as 0.
  bool constant = false;
};

/// Geyer initial monotone sequence estimator.  ESS is capped at 1.05 N.
EssResult ess_detail(std::span<const double> series);
double ess(std::span<const double> series);

/// Classic potential scale reduction over the given chains (no splitting).
double rhat(const std::vector<std::vector<double>>& chains);
/// Each chain is split in half (odd lengths drop the middle draw) and the
/// classic formula is applied to the halves.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double ess = 0.0;
  double ess_per_iter = 0.0;
  double rhat = 0.0;
};

/// Linear-interpolation quantile of sorted data (R type 7).
double quantile_sorted(std::span<const double> sorted, double prob);

/// One row per column of the chain draw matrices (all chains share the
/// column layout).  ESS is summed over chains; ess_per_iter divides by the
/// total number of draws; rhat is split R-hat.
std::vector<SummaryRow> summarize(const std::vector<Matrix>& chains, const std::vector<std::string>& names);

/// Writes summary rows as CSV with a header.
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Tidy long-format export (iteration, chain, parameter, value) keeping every
/// `thin`-th draw, for external trace plots.
void write_trace_tidy_csv(std::ostream& os, const std::vector<Matrix>& chains, const std::vector<std::string>& names,
                          int thin = 1);

}  // namespace polar
