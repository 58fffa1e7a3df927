// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal CSV reading/writing.  Floating-point values are written with 17
// significant digits so that every value round-trips exactly.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "polar/matcore.hpp"

namespace polar::csv {

std::string format_double(double v);

/// Writes one row, joining fields with commas.
void write_row(std::ostream& os, const std::vector<std::string>& fields);

/// Writes a matrix with the given header (one name per column).
void write_matrix(std::ostream& os, const Matrix& m, const std::vector<std::string>& header);

/// Splits a line on commas; surrounding whitespace and double quotes are
/// stripped from each cell.
std::vector<std::string> split_line(std::string_view line);

/// Reads all non-empty lines into cells.
std::vector<std::vector<std::string>> read_cells(std::istream& is);

/// Parses a full cell as a double; returns false on trailing garbage.
bool parse_double(std::string_view cell, double& out);

}  // namespace polar::csv
