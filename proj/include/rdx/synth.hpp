#pragma once

#include "rdx/core.hpp"

#include <json.hpp>

namespace rdx {

/// How representation B departs from A.
struct Manipulation {
  enum class Kind { merge, split, relabel_noise };
  Kind kind = Kind::merge;
  int c1 = 0;          // merge
  int c2 = 1;          // merge
  int cluster = 0;     // split
  int axis = -1;       // split: coordinate index, or -1 for a seeded random direction
  double sigma = 0.0;  // relabel_noise
};

/// Gaussian-mixture fixture with a planted difference between A and B.
struct PlantedSpec {
  int n_per_cluster = 150;
  int n_clusters = 4;
  int d = 16;
  Manipulation manipulation;
  double cluster_separation = 10.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_per_cluster < 1) throw ValidationError("n_per_cluster must be >= 1");
    if (n_clusters < 2) throw ValidationError("n_clusters must be >= 2");
    if (d < n_clusters) {
      throw ValidationError("d must be >= n_clusters for the simplex mean layout (d=" +
                            std::to_string(d) + ", n_clusters=" + std::to_string(n_clusters) + ")");
    }
    if (!(cluster_separation > 0.0)) throw ValidationError("cluster_separation must be positive");
    if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be nonnegative");
    const auto in_range = [&](int c) { return c >= 0 && c < n_clusters; };
    switch (manipulation.kind) {
      case Manipulation::Kind::merge:
        if (!in_range(manipulation.c1) || !in_range(manipulation.c2)) {
          throw ValidationError("merge clusters out of range");
        }
        if (manipulation.c1 == manipulation.c2) throw ValidationError("merge needs c1 != c2");
        break;
      case Manipulation::Kind::split:
        if (!in_range(manipulation.cluster)) throw ValidationError("split cluster out of range");
        if (manipulation.axis >= d) throw ValidationError("split axis out of range");
        if (n_per_cluster < 2) throw ValidationError("split needs n_per_cluster >= 2");
        break;
      case Manipulation::Kind::relabel_noise:
        if (!(manipulation.sigma >= 0.0)) throw ValidationError("relabel_noise sigma must be >= 0");
        break;
    }
  }
};

struct PlantedTruth {
  std::vector<int> labels;     // mixture component of each item (as drawn in A)
  std::vector<bool> planted;   // item belongs to a manipulated cluster
  // pair_mask(i, j): relative closeness of (i, j) differs by construction.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> pair_mask;
};

struct PlantedPair {
  EmbeddingMatrix a;
  EmbeddingMatrix b;
  PlantedTruth truth;
};

/// Items are laid out cluster by cluster. Cluster means sit at
/// separation * e_c so all mean pairs are equally far apart; B reuses A's
/// noise draw and only moves what the manipulation names.
inline PlantedPair generate_pair(const PlantedSpec& spec) {
  spec.validate();
  const Index n = static_cast<Index>(spec.n_per_cluster) * spec.n_clusters;
  const Index d = spec.d;
  Rng rng(spec.seed);

  Matrix means = Matrix::Zero(spec.n_clusters, d);
  for (int c = 0; c < spec.n_clusters; ++c) means(c, c) = spec.cluster_separation;

  Matrix noise(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) noise(i, j) = spec.noise_sd * rng.normal();

  PlantedTruth truth;
  truth.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) truth.labels[static_cast<std::size_t>(i)] = static_cast<int>(i / spec.n_per_cluster);

  Matrix a(n, d);
  for (Index i = 0; i < n; ++i) a.row(i) = means.row(truth.labels[static_cast<std::size_t>(i)]) + noise.row(i);
  Matrix b = a;

  truth.planted.assign(static_cast<std::size_t>(n), false);
  truth.pair_mask.setConstant(n, n, false);
  const auto& man = spec.manipulation;
  switch (man.kind) {
    case Manipulation::Kind::merge: {
      const Eigen::RowVectorXd mid = 0.5 * (means.row(man.c1) + means.row(man.c2));
      for (Index i = 0; i < n; ++i) {
        const int l = truth.labels[static_cast<std::size_t>(i)];
        if (l == man.c1 || l == man.c2) {
          b.row(i) = mid + noise.row(i);
          truth.planted[static_cast<std::size_t>(i)] = true;
        }
      }
      break;
    }
    case Manipulation::Kind::split: {
      Eigen::RowVectorXd dir = Eigen::RowVectorXd::Zero(d);
      if (man.axis >= 0) {
        dir(man.axis) = 1.0;
      } else {
        for (Index j = 0; j < d; ++j) dir(j) = rng.normal();
        dir.normalize();
      }
      const double offset = 0.5 * spec.cluster_separation;
      const Index begin = static_cast<Index>(man.cluster) * spec.n_per_cluster;
      const Index half = spec.n_per_cluster / 2;
      for (Index r = 0; r < spec.n_per_cluster; ++r) {
        const Index i = begin + r;
        b.row(i) += (r < half ? offset : -offset) * dir;
        truth.planted[static_cast<std::size_t>(i)] = true;
      }
      break;
    }
    case Manipulation::Kind::relabel_noise: {
      // Undirected perturbation: nothing is planted.
      if (man.sigma > 0.0) {
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < d; ++j) b(i, j) += man.sigma * rng.normal();
      }
      break;
    }
  }

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      if (man.kind == Manipulation::Kind::merge) {
        truth.pair_mask(i, j) = truth.planted[si] && truth.planted[sj];
      } else if (man.kind == Manipulation::Kind::split) {
        // Pairs torn across the two halves.
        const Index begin = static_cast<Index>(man.cluster) * spec.n_per_cluster;
        const Index half = spec.n_per_cluster / 2;
        truth.pair_mask(i, j) = truth.planted[si] && truth.planted[sj] &&
                                ((i - begin) < half) != ((j - begin) < half);
      }
    }
  }

  auto ids = default_item_ids(n);
  return {make_embedding("A", std::move(a), ids), make_embedding("B", std::move(b), ids),
          std::move(truth)};
}

// JSON form of PlantedSpec, e.g.
// {"n_per_cluster":150,"n_clusters":4,"d":16,"cluster_separation":10,"noise_sd":1,
//  "seed":7,"manipulation":{"kind":"merge","c1":0,"c2":1}}
inline void to_json(nlohmann::json& j, const PlantedSpec& s) {
  nlohmann::json man;
  switch (s.manipulation.kind) {
    case Manipulation::Kind::merge:
      man = {{"kind", "merge"}, {"c1", s.manipulation.c1}, {"c2", s.manipulation.c2}};
      break;
    case Manipulation::Kind::split:
      man = {{"kind", "split"}, {"cluster", s.manipulation.cluster}, {"axis", s.manipulation.axis}};
      break;
    case Manipulation::Kind::relabel_noise:
      man = {{"kind", "relabel_noise"}, {"sigma", s.manipulation.sigma}};
      break;
  }
  j = {{"n_per_cluster", s.n_per_cluster},
       {"n_clusters", s.n_clusters},
       {"d", s.d},
       {"cluster_separation", s.cluster_separation},
       {"noise_sd", s.noise_sd},
       {"seed", s.seed},
       {"manipulation", man}};
}

/// Missing fields keep their defaults.
inline void from_json(const nlohmann::json& j, PlantedSpec& s) {
  s = PlantedSpec{};
  s.n_per_cluster = j.value("n_per_cluster", s.n_per_cluster);
  s.n_clusters = j.value("n_clusters", s.n_clusters);
  s.d = j.value("d", s.d);
  s.cluster_separation = j.value("cluster_separation", s.cluster_separation);
  s.noise_sd = j.value("noise_sd", s.noise_sd);
  s.seed = j.value("seed", s.seed);
  if (j.contains("manipulation")) {
    const auto& m = j.at("manipulation");
    const std::string kind = m.value("kind", std::string("merge"));
    if (kind == "merge") {
      s.manipulation.kind = Manipulation::Kind::merge;
      s.manipulation.c1 = m.value("c1", 0);
      s.manipulation.c2 = m.value("c2", 1);
    } else if (kind == "split") {
      s.manipulation.kind = Manipulation::Kind::split;
      s.manipulation.cluster = m.value("cluster", 0);
      s.manipulation.axis = m.value("axis", -1);
    } else if (kind == "relabel_noise") {
      s.manipulation.kind = Manipulation::Kind::relabel_noise;
      s.manipulation.sigma = m.value("sigma", 0.0);
    } else {
      throw ValidationError("unknown manipulation kind '" + kind + "'");
    }
  }
}

}  // namespace rdx
