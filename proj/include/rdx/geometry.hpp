#pragma once

#include "rdx/core.hpp"

#include <numeric>

namespace rdx {

/// Plain Euclidean distances between embedding rows.
struct DistanceMatrix {
  Matrix data;
};

enum class DistanceKind { neighborhood, max_normalized, locally_scaled };

inline const char* to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::neighborhood: return "neighborhood";
    case DistanceKind::max_normalized: return "maxnorm";
    case DistanceKind::locally_scaled: return "localscale";
  }
  return "?";
}

inline DistanceKind distance_kind_from_string(const std::string& s) {
  if (s == "neighborhood") return DistanceKind::neighborhood;
  if (s == "maxnorm") return DistanceKind::max_normalized;
  if (s == "localscale") return DistanceKind::locally_scaled;
  throw ValidationError("unknown distance kind '" + s + "'");
}

/// Scale-comparable distances. For the neighborhood kind each entry (i, j) is
/// the rank of j among i's neighbors (1..n-1, diagonal 0) stored exactly as
/// a double.
struct NormalizedDistance {
  Matrix data;
  DistanceKind kind = DistanceKind::neighborhood;

  Index size() const { return data.rows(); }
};

inline DistanceMatrix pairwise_euclidean(const EmbeddingMatrix& emb) {
  emb.validate();
  const Index n = emb.size();
  const Matrix& x = emb.data;
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return {std::move(d)};
}

namespace detail {

/// Indices j != i of row `row` ordered by ascending distance, ties by index.
inline std::vector<Index> neighbor_order(const Matrix& dist, Index row) {
  const Index n = dist.cols();
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j != row) order.push_back(j);
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double da = dist(row, a);
    const double db = dist(row, b);
    return da < db || (da == db && a < b);
  });
  return order;
}

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 2) {
    throw ValidationError(std::string(what) + " must be square with n >= 2, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace detail

inline NormalizedDistance rank_normalize(const DistanceMatrix& dist) {
  detail::require_square(dist.data, "distance matrix");
  const Index n = dist.data.rows();
  Matrix ranks = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto order = detail::neighbor_order(dist.data, i);
    for (std::size_t r = 0; r < order.size(); ++r) {
      ranks(i, order[r]) = static_cast<double>(r + 1);
    }
  }
  return {std::move(ranks), DistanceKind::neighborhood};
}

inline NormalizedDistance max_normalize(const DistanceMatrix& dist) {
  detail::require_square(dist.data, "distance matrix");
  const double max = dist.data.maxCoeff();
  if (!(max > 0.0)) {
    throw DegenerateInputError("max normalization of an all-zero distance matrix");
  }
  return {dist.data / max, DistanceKind::max_normalized};
}

/// Divides row i by the distance from i to its `neighbor_index`-th nearest
/// neighbor (self excluded). Rows are scaled independently, so the result is
/// asymmetric in general.
inline NormalizedDistance local_scale_normalize(const DistanceMatrix& dist,
                                                Index neighbor_index = 7) {
  detail::require_square(dist.data, "distance matrix");
  const Index n = dist.data.rows();
  if (neighbor_index < 1 || n <= neighbor_index) {
    throw ValidationError("local scaling needs 1 <= neighbor_index < n (neighbor_index=" +
                          std::to_string(neighbor_index) + ", n=" + std::to_string(n) + ")");
  }
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto order = detail::neighbor_order(dist.data, i);
    const double scale = dist.data(i, order[static_cast<std::size_t>(neighbor_index - 1)]);
    if (!(scale > 0.0)) {
      throw DegenerateInputError("local scale of item " + std::to_string(i) +
                                 " is zero (duplicate points)");
    }
    out.row(i) = dist.data.row(i) / scale;
  }
  return {std::move(out), DistanceKind::locally_scaled};
}

inline NormalizedDistance normalize(const DistanceMatrix& dist, DistanceKind kind,
                                    Index neighbor_index = 7) {
  switch (kind) {
    case DistanceKind::neighborhood: return rank_normalize(dist);
    case DistanceKind::max_normalized: return max_normalize(dist);
    case DistanceKind::locally_scaled: return local_scale_normalize(dist, neighbor_index);
  }
  throw ValidationError("unknown distance kind");
}

/// Principal components of the column-centered data.
struct PrincipalComponents {
  Matrix components;    // k x d, orthonormal rows
  Matrix coefficients;  // n x k projections of the centered data
  Vector singular_values;
  Vector mean;
  Index rank = 0;       // numerical rank of the centered data
};

/// Top-`k` principal directions. Each component's largest-magnitude loading
/// is made positive (first such loading on ties). Components beyond the
/// numerical rank are returned as zero rows.
inline PrincipalComponents principal_components(const Matrix& x, Index k) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (k < 1 || k > d) {
    throw ValidationError("requested " + std::to_string(k) + " principal components of " +
                          std::to_string(d) + "-dimensional data");
  }
  PrincipalComponents pc;
  pc.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - pc.mean.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double tol = std::max<double>(static_cast<double>(std::max(n, d)) *
                                          std::numeric_limits<double>::epsilon() *
                                          (sv.size() > 0 ? sv(0) : 0.0),
                                      1e-300);
  pc.rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++pc.rank;
  }
  pc.singular_values = Vector::Zero(k);
  pc.components = Matrix::Zero(k, d);
  for (Index c = 0; c < k && c < sv.size(); ++c) {
    if (c >= pc.rank) break;
    Vector v = svd.matrixV().col(c);
    Index arg = 0;
    for (Index j = 1; j < d; ++j) {
      if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
    }
    if (v(arg) < 0) v = -v;
    pc.components.row(c) = v.transpose();
    pc.singular_values(c) = sv(c);
  }
  pc.coefficients = centered * pc.components.transpose();
  return pc;
}

/// 2-D coordinates for report overlays.
struct Projection2D {
  Matrix coords;              // n x 2
  bool rank_deficient = false;  // fewer than two nonzero singular values; padded with zeros
};

inline Projection2D pca_coords(const EmbeddingMatrix& emb) {
  emb.validate();
  if (emb.dim() < 2) {
    throw ValidationError("pca_coords needs d >= 2, embedding '" + emb.model_id + "' has d=" +
                          std::to_string(emb.dim()));
  }
  const auto pc = principal_components(emb.data, 2);
  return {pc.coefficients, pc.rank < 2};
}

}  // namespace rdx
