#pragma once

#include "rdx/geometry.hpp"

namespace rdx {

enum class DiffKind { locally_biased_tanh, subtraction };

inline const char* to_string(DiffKind kind) {
  return kind == DiffKind::locally_biased_tanh ? "tanh" : "sub";
}

inline DiffKind diff_kind_from_string(const std::string& s) {
  if (s == "tanh") return DiffKind::locally_biased_tanh;
  if (s == "sub") return DiffKind::subtraction;
  throw ValidationError("unknown difference kind '" + s + "'");
}

/// Directed difference G between a source and a reference representation.
/// Negative entries mark pairs that are closer in the source.
struct DifferenceMatrix {
  Matrix data;
  Direction direction;
  DiffKind kind = DiffKind::locally_biased_tanh;
  double gamma = 0.0;
  // Off-diagonal cells whose min distance was 0 and got the row fallback.
  std::size_t zero_min_cells = 0;
};

/// Symmetric affinity F; large entries mark pairs closer in the source.
struct AffinityMatrix {
  Matrix data;
  double beta = 0.0;
  Direction direction;
  // Cells whose exponent was clamped to +-700.
  std::size_t clamped_cells = 0;
};

namespace detail {

inline void require_comparable(const NormalizedDistance& a, const NormalizedDistance& b) {
  if (a.kind != b.kind) {
    throw ValidationError(std::string("distance kinds differ: ") + to_string(a.kind) + " vs " +
                          to_string(b.kind));
  }
  if (a.data.rows() != b.data.rows() || a.data.cols() != b.data.cols()) {
    throw ValidationError("distance matrices differ in size: " + std::to_string(a.data.rows()) +
                          " vs " + std::to_string(b.data.rows()));
  }
  require_square(a.data, "distance matrix");
}

}  // namespace detail

/// G[i][j] = tanh(gamma * (dA - dB) / min(dA, dB)), diagonal 0.
///
/// Dividing by the smaller of the two distances weights disagreements among
/// near neighbors far more than the same absolute change between distant
/// items; gamma sets how quickly tanh saturates. When min(dA, dB) is zero off
/// the diagonal (duplicate items under max normalization) the smallest
/// positive min of that row is used instead and the cell is counted.
inline DifferenceMatrix locally_biased_diff(const NormalizedDistance& a,
                                            const NormalizedDistance& b, double gamma,
                                            Direction direction = {"A", "B"}) {
  detail::require_comparable(a, b);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("gamma must be positive, got " + std::to_string(gamma));
  }
  const Index n = a.size();
  DifferenceMatrix g{Matrix::Zero(n, n), std::move(direction), DiffKind::locally_biased_tanh,
                     gamma, 0};
  for (Index i = 0; i < n; ++i) {
    double row_fallback = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double m = std::min(a.data(i, j), b.data(i, j));
      if (m > 0.0) row_fallback = std::min(row_fallback, m);
    }
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double da = a.data(i, j);
      const double db = b.data(i, j);
      double m = std::min(da, db);
      if (!(m > 0.0)) {
        ++g.zero_min_cells;
        if (da == db) continue;  // no difference to scale
        m = std::isfinite(row_fallback) ? row_fallback : 1.0;
      }
      g.data(i, j) = std::tanh(gamma * (da - db) / m);
    }
  }
  return g;
}

inline DifferenceMatrix subtraction_diff(const NormalizedDistance& a, const NormalizedDistance& b,
                                         Direction direction = {"A", "B"}) {
  detail::require_comparable(a, b);
  return {a.data - b.data, std::move(direction), DiffKind::subtraction, 0.0, 0};
}

/// F = (exp(-beta G) + exp(-beta G)^T) / 2.
inline AffinityMatrix affinity(const DifferenceMatrix& g, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ValidationError("beta must be positive, got " + std::to_string(beta));
  }
  constexpr double kClamp = 700.0;
  const Index n = g.data.rows();
  Matrix e(n, n);
  std::size_t clamped = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      double x = -beta * g.data(i, j);
      if (x > kClamp || x < -kClamp) {
        x = std::clamp(x, -kClamp, kClamp);
        ++clamped;
      }
      e(i, j) = std::exp(x);
    }
  }
  Matrix f(n, n);
  for (Index i = 0; i < n; ++i) {
    f(i, i) = e(i, i);
    for (Index j = i + 1; j < n; ++j) {
      const double v = 0.5 * (e(i, j) + e(j, i));
      f(i, j) = v;
      f(j, i) = v;
    }
  }
  return {std::move(f), beta, g.direction, clamped};
}

}  // namespace rdx
