// SPDX-License-Identifier: Apache-2.0

#include "polar/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polar/errors.hpp"

namespace polar {

LowRankDraw align_to(const LowRankDraw& draw, const LowRankDraw& reference) {
  const Eigen::Index k = draw.scale.size();
  if (reference.scale.size() != k || draw.left.cols() != k || draw.right.cols() != k ||
      reference.right.rows() != draw.right.rows() || reference.right.cols() != k) {
    throw DomainError("align_draws: draw shapes disagree with the reference");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(reference.scale(a)) > std::abs(reference.scale(b));
  });

  const Matrix inner = reference.right.transpose() * draw.right;  // (ref col, draw col)
  std::vector<bool> taken(static_cast<std::size_t>(k), false);
  LowRankDraw out{Matrix(draw.left.rows(), k), Vector(k), Matrix(draw.right.rows(), k)};
  for (Eigen::Index i : order) {
    Eigen::Index best = -1;
    double best_val = -1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (taken[j]) continue;
      if (std::abs(inner(i, j)) > best_val) {
        best_val = std::abs(inner(i, j));
        best = j;
      }
    }
    taken[best] = true;
    const double sign = inner(i, best) < 0.0 ? -1.0 : 1.0;
    out.left.col(i) = sign * draw.left.col(best);
    out.right.col(i) = sign * draw.right.col(best);
    out.scale(i) = draw.scale(best);
  }
  return out;
}

std::vector<LowRankDraw> align_draws(const std::vector<LowRankDraw>& draws) {
  std::vector<LowRankDraw> out;
  out.reserve(draws.size());
  if (draws.empty()) return out;
  for (const LowRankDraw& d : draws) out.push_back(align_to(d, draws.front()));
  return out;
}

}  // namespace polar
