#pragma once

#include "rdx/core.hpp"

namespace rdx {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). Returns the column assigned to each
/// row.
inline std::vector<Index> min_cost_assignment(const Matrix& cost) {
  if (cost.cols() != cost.rows()) throw ValidationError("assignment cost matrix must be square");
  const auto n = static_cast<std::size_t>(cost.rows());
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  auto c = [&](std::size_t i, std::size_t j) {
    return cost(static_cast<Index>(i - 1), static_cast<Index>(j - 1));
  };
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = static_cast<Index>(j - 1);
  }
  return row_to_col;
}

/// Maximum-weight matching on a rectangular weight matrix, padded with zero
/// rows/columns. Rows left unmatched (or matched to padding) get -1.
inline std::vector<Index> max_weight_assignment(const Matrix& weight) {
  const Index rows = weight.rows();
  const Index cols = weight.cols();
  const Index n = std::max(rows, cols);
  if (n == 0) return {};
  Matrix padded = Matrix::Zero(n, n);
  padded.topLeftCorner(rows, cols) = weight;
  const double top = padded.maxCoeff();
  const auto assign = min_cost_assignment((top - padded.array()).matrix());
  std::vector<Index> out(static_cast<std::size_t>(rows), -1);
  for (Index r = 0; r < rows; ++r) {
    const Index c = assign[static_cast<std::size_t>(r)];
    if (c < cols) out[static_cast<std::size_t>(r)] = c;
  }
  return out;
}

}  // namespace rdx
