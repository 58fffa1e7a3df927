// SPDX-License-Identifier: Apache-2.0
#pragma once

// Column sign/permutation alignment of low-rank draws for reporting.
// Identifiable products (left * diag(scale) * right^T) are unchanged.

#include <vector>

#include "polar/matcore.hpp"

namespace polar {

struct LowRankDraw {
  Matrix left;   // n x k (Q for the eigenmodel, U for FPCA)
  Vector scale;  // k (lambda, or d)
  Matrix right;  // p x k (Q again, or V)
};

/// Aligns one draw to a reference: reference columns are visited in order of
/// decreasing |scale|, each claims the unclaimed draw column with the largest
/// |<right_j, ref_right_i>|, and the sign is chosen to make it positive.
LowRankDraw align_to(const LowRankDraw& draw, const LowRankDraw& reference);

/// Aligns every draw to draws.front().
std::vector<LowRankDraw> align_draws(const std::vector<LowRankDraw>& draws);

}  // namespace polar
