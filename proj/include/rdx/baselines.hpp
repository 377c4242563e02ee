#pragma once

#include "rdx/geometry.hpp"
#include "rdx/kmeans.hpp"

namespace rdx {

// Single-representation concept extractors. They see only one embedding, so
// nothing steers them toward what differs from the other model.

enum class BaselineMethod { kmeans, pca, nmf };

inline const char* to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kmeans: return "kmeans";
    case BaselineMethod::pca: return "pca";
    case BaselineMethod::nmf: return "nmf";
  }
  return "?";
}

inline BaselineMethod baseline_method_from_string(const std::string& s) {
  if (s == "kmeans") return BaselineMethod::kmeans;
  if (s == "pca") return BaselineMethod::pca;
  if (s == "nmf") return BaselineMethod::nmf;
  throw ValidationError("unknown baseline method '" + s + "'");
}

struct ConceptBasis {
  BaselineMethod method = BaselineMethod::kmeans;
  Matrix components;    // k x d: centroids or basis vectors
  Matrix coefficients;  // n x k
  std::vector<double> objective_trace;  // NMF only: ||X - WH||_F^2 after init and each update
};

namespace detail {

/// Items ordered by descending score, ties by index; first `count` kept.
inline std::vector<Index> top_items(const Vector& score, Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(score.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  const auto take = static_cast<std::size_t>(std::min(count, score.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](Index a, Index b) {
                      return score(a) > score(b) || (score(a) == score(b) && a < b);
                    });
  idx.resize(take);
  return idx;
}

/// One grid per component from the items with the largest coefficients;
/// labels assign each item to its largest coefficient.
inline ExplanationSet max_sampling(const Matrix& coefficients, Index grid_size,
                                   const std::string& model_id) {
  ExplanationSet set;
  set.direction = {model_id, ""};
  for (Index c = 0; c < coefficients.cols(); ++c) {
    ExplanationGrid grid;
    grid.members = top_items(coefficients.col(c), grid_size);
    grid.anchor = grid.members.front();
    grid.target_size = grid_size;
    grid.source_cluster = static_cast<int>(c);
    set.grids.push_back(std::move(grid));
  }
  set.labels.resize(static_cast<std::size_t>(coefficients.rows()));
  for (Index i = 0; i < coefficients.rows(); ++i) {
    Index best;
    coefficients.row(i).maxCoeff(&best);
    set.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return set;
}

inline void require_grid_size(Index grid_size) {
  if (grid_size < 1) throw ValidationError("grid_size must be >= 1");
}

}  // namespace detail

inline ExplanationSet kmeans_explain(const EmbeddingMatrix& emb, int k, Index grid_size,
                                     std::uint64_t seed) {
  emb.validate();
  detail::require_grid_size(grid_size);
  if (k < 1 || k > emb.size()) {
    throw ValidationError("kmeans_explain needs 1 <= k <= n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(emb.size()) + ")");
  }
  const auto km = kmeans(emb.data, k, {10, 300, 1e-6, seed});
  ExplanationSet set;
  set.direction = {emb.model_id, ""};
  set.labels = km.labels;
  for (int c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < emb.size(); ++i) {
      if (km.labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
    }
    // Negated distance so the generic top-k picks the nearest first.
    Vector score(static_cast<Index>(members.size()));
    for (std::size_t r = 0; r < members.size(); ++r) {
      score(static_cast<Index>(r)) = -(emb.data.row(members[r]) - km.centroids.row(c)).norm();
    }
    ExplanationGrid grid;
    for (Index r : detail::top_items(score, grid_size)) grid.members.push_back(members[static_cast<std::size_t>(r)]);
    grid.anchor = grid.members.front();
    grid.target_size = grid_size;
    grid.source_cluster = c;
    set.grids.push_back(std::move(grid));
  }
  return set;
}

inline ConceptBasis pca_basis(const EmbeddingMatrix& emb, Index k) {
  emb.validate();
  if (k < 1 || k > emb.dim()) {
    throw ValidationError("pca needs 1 <= k <= d (k=" + std::to_string(k) + ", d=" +
                          std::to_string(emb.dim()) + ")");
  }
  const auto pc = principal_components(emb.data, k);
  if (k > pc.rank) {
    throw ValidationError("pca with k=" + std::to_string(k) + " exceeds the usable rank " +
                          std::to_string(pc.rank));
  }
  return {BaselineMethod::pca, pc.components, pc.coefficients, {}};
}

inline ExplanationSet pca_explain(const EmbeddingMatrix& emb, Index k, Index grid_size) {
  detail::require_grid_size(grid_size);
  return detail::max_sampling(pca_basis(emb, k).coefficients, grid_size, emb.model_id);
}

struct NmfOptions {
  int iters = 500;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Lee-Seung multiplicative updates for min ||X - W H||_F^2, W, H >= 0.
inline ConceptBasis nmf_basis(const EmbeddingMatrix& emb, Index k, const NmfOptions& opts = {}) {
  emb.validate();
  const Matrix& x = emb.data;
  if ((x.array() < 0.0).any()) {
    throw ValidationError("NMF needs a nonnegative embedding; '" + emb.model_id +
                          "' has negative entries (use the pca or kmeans baseline instead)");
  }
  if (k < 1 || k > std::min(x.rows(), x.cols())) {
    throw ValidationError("NMF needs 1 <= k <= min(n, d), got k=" + std::to_string(k));
  }
  const double mean = x.mean();
  if (!(mean > 0.0)) throw DegenerateInputError("NMF of an all-zero embedding");
  const double scale = std::sqrt(mean / static_cast<double>(k));
  Rng rng(opts.seed);
  Matrix w(x.rows(), k), h(k, x.cols());
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i) w(i, j) = scale * rng.uniform();
  for (Index j = 0; j < h.cols(); ++j)
    for (Index i = 0; i < h.rows(); ++i) h(i, j) = scale * rng.uniform();

  constexpr double eps = 1e-12;
  ConceptBasis basis;
  basis.method = BaselineMethod::nmf;
  double prev = (x - w * h).squaredNorm();
  basis.objective_trace.push_back(prev);
  for (int it = 0; it < opts.iters; ++it) {
    h.array() *= (w.transpose() * x).array() / ((w.transpose() * w * h).array() + eps);
    w.array() *= (x * h.transpose()).array() / ((w * (h * h.transpose())).array() + eps);
    const double cur = (x - w * h).squaredNorm();
    basis.objective_trace.push_back(cur);
    if (std::abs(prev - cur) <= opts.rel_tol * std::max(prev, eps)) break;
    prev = cur;
  }
  basis.components = std::move(h);
  basis.coefficients = std::move(w);
  return basis;
}

inline ExplanationSet nmf_explain(const EmbeddingMatrix& emb, Index k, Index grid_size,
                                  const NmfOptions& opts = {}) {
  detail::require_grid_size(grid_size);
  return detail::max_sampling(nmf_basis(emb, k, opts).coefficients, grid_size, emb.model_id);
}

}  // namespace rdx
