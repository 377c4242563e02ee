#pragma once

#include "rdx/difference.hpp"
#include "rdx/kmeans.hpp"

#include <Eigen/Eigenvalues>

namespace rdx {

struct SpectralConfig {
  int m = 3;  // explanations wanted; m + 1 clusters are formed
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  double eig_tolerance = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (m < 1) throw ValidationError("m must be >= 1, got " + std::to_string(m));
    if (kmeans_restarts < 1) throw ValidationError("kmeans_restarts must be >= 1");
    if (kmeans_max_iter < 1) throw ValidationError("kmeans_max_iter must be >= 1");
    if (!(eig_tolerance > 0.0)) throw ValidationError("eig_tolerance must be positive");
  }
};

struct SpectralPartition {
  std::vector<int> labels;  // canonical: cluster ids ordered by smallest member
  int num_clusters = 0;
  int discarded = 0;  // cluster with the lowest mean off-diagonal affinity
  std::vector<double> mean_affinity;
  Vector eigenvalues;  // the m + 1 smallest Laplacian eigenvalues
  double max_residual = 0.0;
};

/// Mean off-diagonal affinity of the items in `members`; 0 for singletons.
inline double mean_intra_affinity(const Matrix& f, const std::vector<Index>& members) {
  if (members.size() < 2) return 0.0;
  double sum = 0.0;
  for (Index i : members) {
    for (Index j : members) {
      if (i != j) sum += f(i, j);
    }
  }
  const double pairs = static_cast<double>(members.size()) * static_cast<double>(members.size() - 1);
  return sum / pairs;
}

inline std::vector<std::vector<Index>> cluster_members(const std::vector<int>& labels, int k) {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  }
  return out;
}

/// Normalized spectral clustering of F into m + 1 groups.
///
/// Uses L = I - Deg^{-1/2} F Deg^{-1/2}, the eigenvectors of its m + 1
/// smallest eigenvalues as a row-normalized embedding, and seeded k-means on
/// that embedding. The cluster with the lowest mean affinity is reported for
/// the caller to discard: regions where both representations agree have
/// affinities near 1 and carry no difference.
inline SpectralPartition spectral_cluster(const AffinityMatrix& affinity_matrix,
                                          const SpectralConfig& cfg) {
  cfg.validate();
  const Matrix& f = affinity_matrix.data;
  detail::require_square(f, "affinity matrix");
  const Index n = f.rows();
  const int k = cfg.m + 1;
  // n == m + 1 is allowed: every item becomes its own cluster.
  if (n < k) {
    throw ValidationError("spectral clustering into " + std::to_string(k) +
                          " clusters needs n >= " + std::to_string(k) + ", got n=" +
                          std::to_string(n));
  }
  Vector deg = f.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(deg(i) > 0.0)) {
      throw ValidationError("affinity row " + std::to_string(i) + " has zero degree");
    }
  }
  const Vector inv_sqrt = deg.array().rsqrt();
  Matrix lap = -(inv_sqrt.asDiagonal() * f * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(lap);
  if (eig.info() != Eigen::Success) {
    throw ConvergenceError("symmetric eigensolver failed on the normalized Laplacian");
  }
  SpectralPartition out;
  out.num_clusters = k;
  out.eigenvalues = eig.eigenvalues().head(k);
  Matrix embed = eig.eigenvectors().leftCols(k);
  for (Index c = 0; c < k; ++c) {
    const double res = (lap * embed.col(c) - out.eigenvalues(c) * embed.col(c)).norm();
    out.max_residual = std::max(out.max_residual, res);
  }
  if (out.max_residual > cfg.eig_tolerance) {
    throw ConvergenceError("eigenpair residual " + std::to_string(out.max_residual) +
                           " exceeds tolerance " + std::to_string(cfg.eig_tolerance));
  }
  for (Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }

  if (n == k) {
    out.labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(i);
  } else {
    const auto km = kmeans(embed, k,
                           {cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.kmeans_tol, cfg.seed});
    out.labels = canonical_labels(km.labels);
  }

  const auto members = cluster_members(out.labels, k);
  out.mean_affinity.resize(static_cast<std::size_t>(k));
  out.discarded = 0;
  for (int c = 0; c < k; ++c) {
    out.mean_affinity[static_cast<std::size_t>(c)] =
        mean_intra_affinity(f, members[static_cast<std::size_t>(c)]);
    if (out.mean_affinity[static_cast<std::size_t>(c)] <
        out.mean_affinity[static_cast<std::size_t>(out.discarded)]) {
      out.discarded = c;
    }
  }
  return out;
}

struct KnaSelection {
  Index anchor = 0;              // row of the submatrix
  std::vector<Index> neighbors;  // descending affinity
  double kna = 0.0;
};

namespace detail {

/// Up to k column indices of row i with the largest values, skipping i.
/// Descending by value, ties by lower index.
inline std::vector<Index> top_k_in_row(const Matrix& f, Index i, Index k,
                                       const std::vector<char>* excluded = nullptr) {
  std::vector<Index> cand;
  for (Index j = 0; j < f.cols(); ++j) {
    if (j == i) continue;
    if (excluded && (*excluded)[static_cast<std::size_t>(j)]) continue;
    cand.push_back(j);
  }
  const auto take = static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(cand.size())));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                    [&](Index a, Index b) {
                      return f(i, a) > f(i, b) || (f(i, a) == f(i, b) && a < b);
                    });
  cand.resize(take);
  return cand;
}

}  // namespace detail

/// Item with the maximum k-neighborhood affinity (sum of its k largest
/// off-diagonal affinities within the cluster) and those neighbors.
inline KnaSelection kna_select(const Matrix& f_sub, Index k) {
  const Index r = f_sub.rows();
  if (r == 0) throw ValidationError("KNA selection on an empty cluster");
  if (f_sub.cols() != r) throw ValidationError("KNA submatrix must be square");
  if (k < 1) throw ValidationError("KNA needs k >= 1");
  KnaSelection best;
  bool have = false;
  for (Index i = 0; i < r; ++i) {
    auto nb = detail::top_k_in_row(f_sub, i, k);
    double kna = 0.0;
    for (Index j : nb) kna += f_sub(i, j);
    if (!have || kna > best.kna) {
      best = {i, std::move(nb), kna};
      have = true;
    }
  }
  return best;
}

inline Matrix submatrix(const Matrix& f, const std::vector<Index>& idx) {
  const auto r = static_cast<Index>(idx.size());
  Matrix out(r, r);
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) out(a, b) = f(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }
  return out;
}

/// Spectral clustering, discard the lowest-affinity cluster, and one KNA grid
/// per surviving cluster (ordered by cluster id).
inline ExplanationSet sample_explanations(const AffinityMatrix& f, const SpectralConfig& cfg,
                                          Index grid_size) {
  if (grid_size < 2) {
    throw ValidationError("grid_size must be >= 2, got " + std::to_string(grid_size));
  }
  const auto part = spectral_cluster(f, cfg);
  const auto members = cluster_members(part.labels, part.num_clusters);
  ExplanationSet set;
  set.direction = f.direction;
  set.labels = part.labels;
  set.discarded_label = part.discarded;
  set.discarded_cluster = members[static_cast<std::size_t>(part.discarded)];
  for (int c = 0; c < part.num_clusters; ++c) {
    if (c == part.discarded) continue;
    const auto& idx = members[static_cast<std::size_t>(c)];
    const auto sel = kna_select(submatrix(f.data, idx), grid_size - 1);
    ExplanationGrid grid;
    grid.anchor = idx[static_cast<std::size_t>(sel.anchor)];
    grid.members.push_back(grid.anchor);
    for (Index j : sel.neighbors) grid.members.push_back(idx[static_cast<std::size_t>(j)]);
    grid.target_size = grid_size;
    grid.source_cluster = c;
    set.grids.push_back(std::move(grid));
  }
  return set;
}

/// PageRank of the weighted graph with row-stochastic transitions
/// P = Deg^{-1} W. Rows with zero weight teleport uniformly.
inline Vector pagerank(const Matrix& w, double damping = 0.85, double tol = 1e-10,
                       int max_iter = 10000) {
  const Index n = w.rows();
  if (n == 0) return Vector();
  const Vector deg = w.rowwise().sum();
  Vector r = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < max_iter; ++it) {
    double dangling = 0.0;
    Vector scaled(n);
    for (Index i = 0; i < n; ++i) {
      if (deg(i) > 0.0) {
        scaled(i) = r(i) / deg(i);
      } else {
        scaled(i) = 0.0;
        dangling += r(i);
      }
    }
    Vector next = damping * (w.transpose() * scaled);
    next.array() += (1.0 - damping + damping * dangling) / static_cast<double>(n);
    const double delta = (next - r).lpNorm<1>();
    r = std::move(next);
    if (delta < tol) return r;
  }
  throw ConvergenceError("PageRank did not converge in " + std::to_string(max_iter) +
                         " iterations");
}

/// Repeatedly takes the highest-PageRank node of the remaining graph plus the
/// grid_size - 1 heaviest edges at it, then removes those nodes. The
/// diagonal of F is ignored. Items never selected form the discarded group.
inline ExplanationSet pagerank_sample(const AffinityMatrix& f, int m, Index grid_size,
                                      double damping = 0.85, double tol = 1e-10) {
  const Matrix& a = f.data;
  detail::require_square(a, "affinity matrix");
  if (m < 1) throw ValidationError("m must be >= 1");
  if (grid_size < 2) throw ValidationError("grid_size must be >= 2");
  const Index n = a.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (!(a(i, j) >= 0.0) || a(i, j) != a(j, i)) {
        throw ValidationError("PageRank sampling needs a symmetric nonnegative affinity");
      }
    }
  }
  ExplanationSet set;
  set.direction = f.direction;
  set.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), Index{0});
  for (int g = 0; g < m && !remaining.empty(); ++g) {
    Matrix sub = submatrix(a, remaining);
    sub.diagonal().setZero();
    const Vector pr = pagerank(sub, damping, tol);
    Index top = 0;
    for (Index i = 1; i < pr.size(); ++i) {
      if (pr(i) > pr(top)) top = i;
    }
    const auto nb = detail::top_k_in_row(sub, top, grid_size - 1);
    ExplanationGrid grid;
    grid.anchor = remaining[static_cast<std::size_t>(top)];
    grid.members.push_back(grid.anchor);
    for (Index j : nb) grid.members.push_back(remaining[static_cast<std::size_t>(j)]);
    grid.target_size = grid_size;
    grid.source_cluster = g;
    for (Index item : grid.members) set.labels[static_cast<std::size_t>(item)] = g;
    std::vector<Index> next;
    for (Index item : remaining) {
      if (set.labels[static_cast<std::size_t>(item)] < 0) next.push_back(item);
    }
    remaining = std::move(next);
    set.grids.push_back(std::move(grid));
  }
  set.discarded_label = static_cast<int>(set.grids.size());
  for (Index i = 0; i < n; ++i) {
    if (set.labels[static_cast<std::size_t>(i)] < 0) {
      set.labels[static_cast<std::size_t>(i)] = set.discarded_label;
      set.discarded_cluster.push_back(i);
    }
  }
  return set;
}

}  // namespace rdx
