// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the `polar` executable.  Each command
// writes its files into `out` after all chains have finished.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polar/diagnostics.hpp"
#include "polar/expansion.hpp"
#include "polar/hmc.hpp"

namespace polar::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Numeric table read from CSV.  A header row and a leading label column
/// are detected automatically.
struct Table {
  Matrix values;
  std::vector<std::string> header;
  std::vector<std::string> row_labels;
};

/// Throws IngestionError with the 1-based line and column of a bad cell.
Table read_table(const fs::path& path);
Table parse_table(std::istream& is, const std::string& source = "<stream>");

/// Keeps columns 0, stride, 2*stride, ...; the column count must be a
/// multiple of stride.
Matrix subsample_columns(const Matrix& y, int stride);

/// Chain count capped by the POLAR_THREADS environment variable.
int thread_cap(int chains);

struct DemoOptions {
  std::string kind = "sphere";  // sphere | stiefel | macg
  int p = 3;
  int k = 1;
  int draws = 10000;
  /// Diagonal of Sigma for kind == macg; empty means the identity.
  std::vector<double> sigma_diag;
  /// "exact" draws directly; "hmc" samples the polar expansion.
  std::string method = "exact";
  HmcConfig hmc;
  fs::path out = ".";
};

struct DemoResult {
  Matrix draws;  // one column-major flattened Q per row
  double mean_norm = 0.0;
  double projection_deviation = 0.0;
};

DemoResult cmd_demo(const DemoOptions& options);

struct EigenmodelOptions {
  fs::path adjacency;
  int k = 3;
  HmcConfig hmc;
  int trace_thin = 1;
  fs::path out = ".";
};

struct EigenmodelResult {
  std::vector<SummaryRow> summary;
  Matrix qlq_mean;
  int divergences = 0;
};

EigenmodelResult cmd_eigenmodel(const EigenmodelOptions& options);

struct FpcaOptions {
  fs::path data;
  int k = 3;
  int stride = 1;
  /// Unset means 2 * (posterior mean d_j) / sqrt(n) for each component.
  std::optional<double> pc_multiple;
  /// Every curve_thin-th draw goes to v3_draws.csv.
  int curve_thin = 10;
  double nugget = 1e-6;
  HmcConfig hmc;
  fs::path out = ".";
};

struct FpcaResult {
  Matrix v_estimate;
  Matrix v_classical;
  std::vector<SummaryRow> summary;
  std::vector<double> grid;
  int divergences = 0;
};

FpcaResult cmd_fpca(const FpcaOptions& options);

struct CheckOptions {
  int points = 20;
  double tolerance = 1e-5;
  std::uint64_t seed = 1;
  /// Replaces polar_vjp inside the model targets (fault injection).
  PolarVjpFn vjp = nullptr;
  fs::path out = ".";
};

struct CheckEntry {
  std::string name;
  bool passed = false;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::string worst;
};

struct CheckReport {
  std::vector<CheckEntry> entries;
  bool passed() const;
};

/// Writes check_report.json into options.out.
CheckReport cmd_check(const CheckOptions& options);

/// polar_vjp with the in-span term negated; used to exercise cmd_check.
Matrix faulty_polar_vjp(const ThinSvd& svd, const Matrix& g);

/// Parses arguments, dispatches and maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace polar::cli
