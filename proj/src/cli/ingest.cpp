// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <algorithm>
#include <cmath>

#include "polar/cli.hpp"
#include "polar/csv.hpp"
#include "polar/errors.hpp"

namespace polar::cli {

namespace {

bool numeric(const std::string& cell) {
  double v;
  return csv::parse_double(cell, v);
}

}  // namespace

Table parse_table(std::istream& is, const std::string& source) {
  auto rows = csv::read_cells(is);
  if (rows.empty()) throw IngestionError(source + ": no data");

  // Leading label column: first cell of every row after the first is text.
  bool labels = rows.size() > 1;
  for (std::size_t r = 1; r < rows.size() && labels; ++r) labels = !rows[r].empty() && !numeric(rows[r][0]);
  const std::size_t first_col = labels ? 1 : 0;

  bool header = false;
  for (std::size_t c = first_col; c < rows[0].size(); ++c) header = header || !numeric(rows[0][c]);
  if (labels && rows.size() == 1) header = false;

  const std::size_t first_row = header ? 1 : 0;
  if (rows.size() <= first_row) throw IngestionError(source + ": header but no data rows");
  const std::size_t width = rows[first_row].size();
  if (width <= first_col) throw IngestionError(source + ": no numeric columns");

  Table t;
  t.values.resize(static_cast<Eigen::Index>(rows.size() - first_row), static_cast<Eigen::Index>(width - first_col));
  if (header) {
    if (rows[0].size() != width) {
      std::ostringstream msg;
      msg << source << ": header has " << rows[0].size() << " cells, data rows have " << width;
      throw IngestionError(msg.str());
    }
    t.header.assign(rows[0].begin() + static_cast<long>(first_col), rows[0].end());
  }
  for (std::size_t r = first_row; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width) {
      std::ostringstream msg;
      msg << source << ": row " << r + 1 << " has " << row.size() << " cells, expected " << width;
      throw IngestionError(msg.str());
    }
    if (labels) t.row_labels.push_back(row[0]);
    for (std::size_t c = first_col; c < width; ++c) {
      double v;
      if (!csv::parse_double(row[c], v) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << source << ": row " << r + 1 << ", column " << c + 1 << ": '" << row[c] << "' is not a finite number";
        throw IngestionError(msg.str());
      }
      t.values(static_cast<Eigen::Index>(r - first_row), static_cast<Eigen::Index>(c - first_col)) = v;
    }
  }
  return t;
}

Table read_table(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestionError("cannot open " + path.string());
  return parse_table(is, path.string());
}

Matrix subsample_columns(const Matrix& y, int stride) {
  if (stride < 1) throw DomainError("stride must be >= 1");
  if (y.cols() % stride != 0) {
    std::ostringstream msg;
    msg << "stride " << stride << " does not divide the grid length " << y.cols();
    throw DomainError(msg.str());
  }
  const Eigen::Index keep = y.cols() / stride;
  Matrix out(y.rows(), keep);
  for (Eigen::Index j = 0; j < keep; ++j) out.col(j) = y.col(j * stride);
  return out;
}

int thread_cap(int chains) {
  int cap = chains;
  if (const char* env = std::getenv("POLAR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) cap = std::min<long>(cap, v);
  }
  return std::max(cap, 1);
}

}  // namespace polar::cli
