// SPDX-License-Identifier: Apache-2.0

#include "polar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polar/csv.hpp"
#include "polar/errors.hpp"

namespace polar {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

EssResult ess_detail(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) throw DomainError("ess: series too short");
  EssResult r;
  const double mu = mean_of(series);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mu;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  const double nd = static_cast<double>(n);
  double scale = 0.0;
  for (double v : series) scale = std::max(scale, std::abs(v));
  const double tiny = 1e-13 * scale;
  if (!(gamma0 > tiny * tiny)) {
    r.constant = true;
    r.ess = 0.0;
    r.tau = std::numeric_limits<double>::infinity();
    return r;
  }
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(2 * m) / gamma0 + autocov(2 * m + 1) / gamma0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    r.pair_sums.push_back(pair);
    sum += pair;
    r.truncation_lag = static_cast<int>(2 * m + 1);
  }
  r.tau = std::max(-1.0 + 2.0 * sum, 1.0 / 1.05);
  r.ess = nd / r.tau;
  return r;
}

double ess(std::span<const double> series) { return ess_detail(series).ess; }

double rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw DomainError("rhat: need at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw DomainError("rhat: chains too short");
  for (const auto& c : chains)
    if (c.size() != n) throw DomainError("rhat: chains have unequal lengths");
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nd / (m - 1.0);
  if (!(w > 0.0)) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(var_plus / w);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw DomainError("split_rhat: no chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw DomainError("split_rhat: chains have unequal lengths");
  if (n < 4) throw DomainError("split_rhat: chains too short to split");
  const std::size_t half = n / 2;
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + half);
    halves.emplace_back(c.end() - half, c.end());
  }
  return rhat(halves);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile: empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<Matrix>& chains, const std::vector<std::string>& names) {
  if (chains.empty()) throw DomainError("summarize: no chains");
  const Eigen::Index cols = chains.front().cols();
  if (static_cast<Eigen::Index>(names.size()) != cols) throw DomainError("summarize: one name per column required");
  std::vector<SummaryRow> rows;
  for (Eigen::Index j = 0; j < cols; ++j) {
    SummaryRow row;
    row.name = names[j];
    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled;
    for (const Matrix& c : chains) {
      std::vector<double> col(c.rows());
      for (Eigen::Index i = 0; i < c.rows(); ++i) col[i] = c(i, j);
      pooled.insert(pooled.end(), col.begin(), col.end());
      per_chain.push_back(std::move(col));
    }
    const double n = static_cast<double>(pooled.size());
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const bool constant = sorted.front() == sorted.back();
    row.mean = constant ? sorted.front() : mean_of(pooled);
    row.sd = (pooled.size() > 1 && !constant) ? std::sqrt(variance_of(pooled)) : 0.0;
    row.q05 = quantile_sorted(sorted, 0.05);
    row.q50 = quantile_sorted(sorted, 0.50);
    row.q95 = quantile_sorted(sorted, 0.95);
    double total_ess = 0.0;
    for (const auto& c : per_chain) total_ess += c.size() >= 4 ? ess(c) : 0.0;
    row.ess = total_ess;
    row.ess_per_iter = total_ess / n;
    if (row.sd == 0.0) {
      row.rhat = 1.0;
    } else {
      row.rhat = per_chain.front().size() >= 4 ? split_rhat(per_chain) : std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  csv::write_row(os, {"name", "mean", "sd", "q05", "q50", "q95", "ess", "ess_per_iter", "rhat"});
  for (const SummaryRow& r : rows) {
    csv::write_row(os, {r.name, csv::format_double(r.mean), csv::format_double(r.sd), csv::format_double(r.q05),
                        csv::format_double(r.q50), csv::format_double(r.q95), csv::format_double(r.ess),
                        csv::format_double(r.ess_per_iter), csv::format_double(r.rhat)});
  }
}

void write_trace_tidy_csv(std::ostream& os, const std::vector<Matrix>& chains, const std::vector<std::string>& names,
                          int thin) {
  if (thin < 1) throw DomainError("trace export: thin must be >= 1");
  csv::write_row(os, {"iteration", "chain", "parameter", "value"});
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (Eigen::Index i = 0; i < chains[c].rows(); i += thin) {
      for (Eigen::Index j = 0; j < chains[c].cols(); ++j) {
        csv::write_row(os, {std::to_string(i + 1), std::to_string(c), names.at(j), csv::format_double(chains[c](i, j))});
      }
    }
  }
}

}  // namespace polar
