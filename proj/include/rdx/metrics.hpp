#pragma once

#include "rdx/assignment.hpp"
#include "rdx/geometry.hpp"
#include "rdx/kmeans.hpp"

#include <map>
#include <optional>
#include <unordered_map>

namespace rdx {

// ---------------------------------------------------------------------------
// Binary success rate
// ---------------------------------------------------------------------------

struct BsrResult {
  double aggregate = 0.0;
  std::vector<double> per_grid;
  std::vector<bool> no_pairs;  // grid had fewer than two members
  std::size_t successes = 0;
  std::size_t pairs = 0;
};

/// Fraction of ordered within-grid pairs (i, j), i != j, that are strictly
/// closer in the source distances than in the reference distances.
inline BsrResult bsr(const std::vector<ExplanationGrid>& grids, const NormalizedDistance& source,
                     const NormalizedDistance& reference) {
  if (source.kind != reference.kind) {
    throw ValidationError(std::string("BSR distance kinds differ: ") + to_string(source.kind) +
                          " vs " + to_string(reference.kind));
  }
  if (source.size() != reference.size()) throw ValidationError("BSR distance sizes differ");
  const Index n = source.size();
  BsrResult out;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const auto& members = grids[g].members;
    for (Index i : members) {
      if (i < 0 || i >= n) {
        throw ValidationError("grid " + std::to_string(g) + " member " + std::to_string(i) +
                              " out of range for n=" + std::to_string(n));
      }
    }
    std::size_t hits = 0;
    std::size_t pairs = 0;
    for (Index i : members) {
      for (Index j : members) {
        if (i == j) continue;
        ++pairs;
        if (source.data(i, j) < reference.data(i, j)) ++hits;
      }
    }
    out.per_grid.push_back(pairs ? static_cast<double>(hits) / static_cast<double>(pairs) : 0.0);
    out.no_pairs.push_back(pairs == 0);
    out.successes += hits;
    out.pairs += pairs;
  }
  out.aggregate =
      out.pairs ? static_cast<double>(out.successes) / static_cast<double>(out.pairs) : 0.0;
  return out;
}

/// BSR on a chosen normalization of the raw distance matrices.
inline BsrResult bsr_variant(const std::vector<ExplanationGrid>& grids,
                             const DistanceMatrix& source, const DistanceMatrix& reference,
                             DistanceKind kind) {
  return bsr(grids, normalize(source, kind), normalize(reference, kind));
}

// ---------------------------------------------------------------------------
// Judge-embedding metrics
// ---------------------------------------------------------------------------

/// Embeddings of the compared items from an external judge model.
struct JudgeEmbeddings {
  std::vector<std::string> items;
  Matrix data;

  /// Rows for `item_ids`, matched by id.
  Matrix rows_for(const std::vector<std::string>& item_ids) const {
    std::unordered_map<std::string, Index> where;
    for (std::size_t i = 0; i < items.size(); ++i) where.emplace(items[i], static_cast<Index>(i));
    Matrix out(static_cast<Index>(item_ids.size()), data.cols());
    for (std::size_t r = 0; r < item_ids.size(); ++r) {
      auto it = where.find(item_ids[r]);
      if (it == where.end()) {
        throw ValidationError("judge embeddings have no item '" + item_ids[r] + "'");
      }
      if (data.row(it->second).squaredNorm() == 0.0) {
        throw DegenerateInputError("judge embedding of item '" + item_ids[r] + "' is zero");
      }
      out.row(static_cast<Index>(r)) = data.row(it->second);
    }
    return out;
  }
};

/// Mean pairwise cosine similarity of the rows of `v`, via the closed form
/// |V|/(|V|-1) * (||mean unit vector||^2 - 1/|V|). Undefined (nullopt) for
/// fewer than two vectors.
inline std::optional<double> clarity(const Matrix& v) {
  const Index k = v.rows();
  if (k < 2) return std::nullopt;
  Vector mean = Vector::Zero(v.cols());
  for (Index i = 0; i < k; ++i) {
    const double norm = v.row(i).norm();
    if (!(norm > 0.0)) {
      throw DegenerateInputError("clarity of a set containing a zero vector (row " +
                                 std::to_string(i) + ")");
    }
    mean += v.row(i).transpose() / norm;
  }
  mean /= static_cast<double>(k);
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (mean.squaredNorm() - 1.0 / kd);
}

/// 1 - clarity of the subset sums, subsets found by seeded k-means (h groups)
/// on the raw vectors. Range [0, 1 + 1/(h-1)].
inline double polysemanticity(const Matrix& v, int h = 2, std::uint64_t seed = 0) {
  if (h < 2 || v.rows() < h) {
    throw ValidationError("polysemanticity needs |V| >= h >= 2 (|V|=" + std::to_string(v.rows()) +
                          ", h=" + std::to_string(h) + ")");
  }
  const auto km = kmeans(v, h, {10, 300, 1e-6, seed});
  Matrix sums = Matrix::Zero(h, v.cols());
  for (Index i = 0; i < v.rows(); ++i) sums.row(km.labels[static_cast<std::size_t>(i)]) += v.row(i);
  for (int c = 0; c < h; ++c) {
    if (!(sums.row(c).norm() > 0.0)) {
      throw DegenerateInputError("polysemanticity subset " + std::to_string(c) +
                                 " sums to the zero vector");
    }
  }
  const double value = 1.0 - *clarity(sums);
  const double hi = 1.0 + 1.0 / static_cast<double>(h - 1);
  return std::clamp(value, 0.0, hi);
}

namespace detail {

inline Matrix concept_means(const std::vector<Matrix>& concepts, const char* side) {
  if (concepts.empty()) throw ValidationError(std::string("redundancy: no concepts on side ") + side);
  Matrix means(static_cast<Index>(concepts.size()), concepts.front().cols());
  for (std::size_t k = 0; k < concepts.size(); ++k) {
    if (concepts[k].rows() == 0) {
      throw ValidationError(std::string("redundancy: concept ") + side + std::to_string(k) +
                            " is empty");
    }
    if (concepts[k].cols() != means.cols()) {
      throw ValidationError("redundancy: concepts differ in embedding dimension");
    }
    const Vector mean = concepts[k].colwise().mean().transpose();
    if (!(mean.norm() > 0.0)) {
      throw DegenerateInputError(std::string("redundancy: concept ") + side + std::to_string(k) +
                                 " has a zero mean embedding");
    }
    means.row(static_cast<Index>(k)) = mean.transpose() / mean.norm();
  }
  return means;
}

}  // namespace detail

/// Mean over `from` concepts of the best cosine similarity between its mean
/// embedding and any `to` concept's mean embedding.
inline double directed_redundancy(const std::vector<Matrix>& from, const std::vector<Matrix>& to) {
  const Matrix a = detail::concept_means(from, "A");
  const Matrix b = detail::concept_means(to, "B");
  if (a.cols() != b.cols()) throw ValidationError("redundancy: sides differ in dimension");
  const Matrix sim = a * b.transpose();
  return sim.rowwise().maxCoeff().mean();
}

/// Symmetric cross-model redundancy in [-1, 1].
inline double redundancy(const std::vector<Matrix>& concepts_a,
                         const std::vector<Matrix>& concepts_b) {
  return 0.5 * (directed_redundancy(concepts_a, concepts_b) +
                directed_redundancy(concepts_b, concepts_a));
}

// ---------------------------------------------------------------------------
// Cluster disagreement
// ---------------------------------------------------------------------------

/// Fraction of items whose clusters disagree after matching the clusters of
/// the two partitions by maximum overlap.
inline double cluster_disagreement(const std::vector<int>& p, const std::vector<int>& q) {
  if (p.empty() || q.empty()) throw ValidationError("cluster disagreement of an empty partition");
  if (p.size() != q.size()) {
    throw ValidationError("partitions cover different numbers of items: " +
                          std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
  std::map<int, Index> p_ids, q_ids;
  for (int l : p) p_ids.emplace(l, static_cast<Index>(p_ids.size()));
  for (int l : q) q_ids.emplace(l, static_cast<Index>(q_ids.size()));
  Matrix overlap = Matrix::Zero(static_cast<Index>(p_ids.size()), static_cast<Index>(q_ids.size()));
  for (std::size_t i = 0; i < p.size(); ++i) overlap(p_ids[p[i]], q_ids[q[i]]) += 1.0;
  const auto match = max_weight_assignment(overlap);
  double matched = 0.0;
  for (Index r = 0; r < overlap.rows(); ++r) {
    const Index c = match[static_cast<std::size_t>(r)];
    if (c >= 0) matched += overlap(r, c);
  }
  const double n = static_cast<double>(p.size());
  return (n - matched) / n;
}

}  // namespace rdx
