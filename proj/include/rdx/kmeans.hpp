#pragma once

#include "rdx/core.hpp"

namespace rdx {

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  int iterations = 0;
};

namespace detail {

inline Matrix kmeanspp_init(const Matrix& x, int k, Rng& rng) {
  const Index n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Index first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = x.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Index i = n - 1; i >= 0; --i) {
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // All remaining points coincide with a center; take the first unused.
      for (Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    for (Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (x.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

inline KMeansResult lloyd(const Matrix& x, Matrix centers, int max_iter, double tol) {
  const Index n = x.rows();
  const Index k = centers.rows();
  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), 0);
  Vector best_d2(n);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = (x.row(i) - centers.row(0)).squaredNorm();
      for (Index c = 1; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      res.labels[static_cast<std::size_t>(i)] = best;
      best_d2(i) = bd;
    }
    // Empty clusters take the point farthest from its own centroid, drawn
    // from a cluster that keeps at least one member.
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int l : res.labels) ++counts[static_cast<std::size_t>(l)];
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)]);
        if (counts[li] < 2) continue;
        if (far < 0 || best_d2(i) > best_d2(far)) far = i;
      }
      if (far < 0) throw ValidationError("k-means cannot fill " + std::to_string(k) + " clusters");
      --counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(far)])];
      res.labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
      counts[static_cast<std::size_t>(c)] = 1;
      best_d2(far) = 0.0;
    }
    Matrix next = Matrix::Zero(k, x.cols());
    for (Index i = 0; i < n; ++i) next.row(res.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (Index c = 0; c < k; ++c) next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    const double shift = (next - centers).squaredNorm();
    centers = std::move(next);
    if (shift <= tol * tol) break;
  }
  res.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    res.inertia += (x.row(i) - centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  res.centroids = std::move(centers);
  return res;
}

}  // namespace detail

/// Lloyd's k-means with ++ seeding; best of `restarts` runs by inertia
/// (earliest run wins ties).
inline KMeansResult kmeans(const Matrix& x, int k, const KMeansOptions& opts = {}) {
  if (k < 1) throw ValidationError("k-means needs k >= 1");
  if (x.rows() < k) {
    throw ValidationError("k-means with k=" + std::to_string(k) + " on " +
                          std::to_string(x.rows()) + " points");
  }
  if (opts.restarts < 1) throw ValidationError("k-means needs restarts >= 1");
  Rng rng(opts.seed);
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < opts.restarts; ++r) {
    auto res = detail::lloyd(x, detail::kmeanspp_init(x, k, rng), opts.max_iter, opts.tol);
    if (!have || res.inertia < best.inertia) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

/// Relabels clusters 0..k-1 in order of their smallest member index.
/// Empty labels are dropped.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::vector<int> map;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    if (l >= map.size()) map.resize(l + 1, -1);
    if (map[l] < 0) map[l] = next++;
    out[i] = map[l];
  }
  return out;
}

}  // namespace rdx
