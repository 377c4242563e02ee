#pragma once

#include "rdx/concepts.hpp"
#include "rdx/metrics.hpp"
#include "rdx/report.hpp"

#include <unordered_map>

namespace rdx {

/// `b` with rows permuted into the order of `items`; both must hold the same
/// item set.
inline EmbeddingMatrix reorder_items(const EmbeddingMatrix& b, const std::vector<std::string>& items) {
  if (b.items == items) return b;
  if (b.items.size() != items.size()) {
    throw ValidationError("representations cover different item sets (" +
                          std::to_string(items.size()) + " vs " + std::to_string(b.items.size()) +
                          " items)");
  }
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < b.items.size(); ++i) where.emplace(b.items[i], static_cast<Index>(i));
  std::vector<Index> rows;
  rows.reserve(items.size());
  for (const auto& id : items) {
    auto it = where.find(id);
    if (it == where.end()) {
      throw ValidationError("item '" + id + "' missing from representation '" + b.model_id + "'");
    }
    rows.push_back(it->second);
  }
  return {b.model_id, items, b.data(rows, Eigen::all)};
}

/// The two representations as they are compared, after item alignment and
/// the optional learned linear alignment.
struct PreparedPair {
  EmbeddingMatrix a;
  EmbeddingMatrix b;
  std::optional<AlignmentRecord> alignment;
};

inline PreparedPair prepare_pair(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                 const RunConfig& cfg) {
  cfg.validate();
  a.validate();
  b.validate();
  if (a.size() > RunConfig::kMaxItems && !cfg.allow_large) {
    throw ValidationError("n=" + std::to_string(a.size()) + " exceeds the " +
                          std::to_string(RunConfig::kMaxItems) +
                          "-item limit (two n x n double matrices per direction); pass "
                          "--allow-large to override");
  }
  PreparedPair p{a, reorder_items(b, a.items), std::nullopt};
  if (cfg.align != AlignMode::none) {
    const AlignmentOptions opts{cfg.align_steps, cfg.align_lr, cfg.align_train_frac, cfg.seed};
    EmbeddingMatrix& moving = cfg.align == AlignMode::a2b ? p.a : p.b;
    const EmbeddingMatrix& target = cfg.align == AlignMode::a2b ? p.b : p.a;
    const auto map = fit_alignment(moving, target, opts);
    moving = apply_alignment(moving, map);
    p.alignment = AlignmentRecord{to_string(cfg.align), map.best_val_cka, map.best_step,
                                  map.train_trace};
  }
  return p;
}

inline std::vector<std::string> ids_of(const std::vector<Index>& idx,
                                       const std::vector<std::string>& items) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(items[static_cast<std::size_t>(i)]);
  return out;
}

namespace detail {

inline ProjectionRecord projection_of(const EmbeddingMatrix& emb) {
  ProjectionRecord rec;
  rec.model_id = emb.model_id;
  Matrix coords;
  if (emb.dim() >= 2) {
    auto proj = pca_coords(emb);
    coords = std::move(proj.coords);
    rec.rank_deficient = proj.rank_deficient;
  } else {
    coords = Matrix::Zero(emb.size(), 2);
    coords.col(0) = emb.data.col(0).array() - emb.data.col(0).mean();
    rec.rank_deficient = true;
  }
  rec.coords.reserve(static_cast<std::size_t>(coords.rows()));
  for (Index i = 0; i < coords.rows(); ++i) rec.coords.push_back({coords(i, 0), coords(i, 1)});
  return rec;
}

inline ExplanationSet explain_direction(const EmbeddingMatrix& src, const EmbeddingMatrix& ref,
                                        const NormalizedDistance& d_src,
                                        const NormalizedDistance& d_ref, const RunConfig& cfg,
                                        DirectionRecord& rec) {
  const Direction dir{src.model_id, ref.model_id};
  if (cfg.method == "rdx") {
    const auto g = cfg.diff == DiffKind::locally_biased_tanh
                       ? locally_biased_diff(d_src, d_ref, cfg.gamma, dir)
                       : subtraction_diff(d_src, d_ref, dir);
    const auto f = affinity(g, cfg.beta);
    rec.zero_min_cells = g.zero_min_cells;
    rec.clamped_cells = f.clamped_cells;
    if (cfg.sampler == Sampler::spectral) {
      SpectralConfig sc;
      sc.m = cfg.m;
      sc.kmeans_restarts = cfg.kmeans_restarts;
      sc.kmeans_max_iter = cfg.kmeans_max_iter;
      sc.eig_tolerance = cfg.eig_tolerance;
      sc.seed = cfg.seed;
      return sample_explanations(f, sc, cfg.grid_size);
    }
    return pagerank_sample(f, cfg.m, cfg.grid_size, cfg.pagerank_damping);
  }
  ExplanationSet set;
  if (cfg.method == "kmeans") {
    set = kmeans_explain(src, cfg.m, cfg.grid_size, cfg.seed);
  } else if (cfg.method == "pca") {
    set = pca_explain(src, cfg.m, cfg.grid_size);
  } else {
    set = nmf_explain(src, cfg.m, cfg.grid_size, {cfg.nmf_iters, 1e-6, cfg.seed});
  }
  set.direction = dir;
  return set;
}

inline std::vector<Index> indices_of(const std::vector<std::string>& ids,
                                     const std::unordered_map<std::string, Index>& where,
                                     const std::string& context) {
  std::vector<Index> out;
  for (const auto& id : ids) {
    auto it = where.find(id);
    if (it == where.end()) throw ValidationError(context + ": unknown item '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

/// Recomputes every metric of `rep` from its stored grids.
inline void score_report(ComparisonReport& rep, const PreparedPair& pair,
                         const JudgeEmbeddings* judge) {
  const auto& cfg = rep.config;
  if (rep.items != pair.a.items) throw ValidationError("report items differ from the inputs");
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < rep.items.size(); ++i) where.emplace(rep.items[i], static_cast<Index>(i));

  const DistanceMatrix raw_a = pairwise_euclidean(pair.a);
  const DistanceMatrix raw_b = pairwise_euclidean(pair.b);
  const auto ranks_a = rank_normalize(raw_a);
  const auto ranks_b = rank_normalize(raw_b);

  std::vector<std::vector<Matrix>> judge_concepts(rep.directions.size());
  for (std::size_t d = 0; d < rep.directions.size(); ++d) {
    auto& dir = rep.directions[d];
    const bool a_is_source = d == 0;
    const DistanceMatrix& raw_src = a_is_source ? raw_a : raw_b;
    const DistanceMatrix& raw_ref = a_is_source ? raw_b : raw_a;

    std::vector<ExplanationGrid> grids;
    for (std::size_t g = 0; g < dir.grids.size(); ++g) {
      ExplanationGrid grid;
      grid.members = detail::indices_of(dir.grids[g].members, where,
                                        "direction " + std::to_string(d) + " grid " + std::to_string(g));
      grid.anchor = grid.members.empty() ? 0 : grid.members.front();
      grid.target_size = dir.grids[g].target_size;
      grids.push_back(std::move(grid));
    }
    const auto main = bsr(grids, a_is_source ? ranks_a : ranks_b, a_is_source ? ranks_b : ranks_a);
    dir.bsr = main.aggregate;
    for (std::size_t g = 0; g < grids.size(); ++g) dir.grids[g].bsr = main.per_grid[g];
    dir.bsr_variants.clear();
    for (auto kind : cfg.bsr_variants) {
      dir.bsr_variants[to_string(kind)] =
          kind == DistanceKind::neighborhood
              ? main.aggregate
              : bsr(grids, normalize(raw_src, kind, cfg.neighbor_index),
                    normalize(raw_ref, kind, cfg.neighbor_index))
                    .aggregate;
    }
    for (std::size_t g = 0; g < grids.size(); ++g) {
      auto& rec = dir.grids[g];
      rec.clarity.reset();
      rec.polysemanticity.reset();
      if (!judge) continue;
      const Matrix v = judge->rows_for(rec.members);
      rec.clarity = clarity(v);
      if (v.rows() >= cfg.poly_h) rec.polysemanticity = polysemanticity(v, cfg.poly_h, cfg.seed);
      judge_concepts[d].push_back(v);
    }
  }
  rep.redundancy.reset();
  if (judge && rep.directions.size() == 2 && !judge_concepts[0].empty() &&
      !judge_concepts[1].empty()) {
    rep.redundancy = redundancy(judge_concepts[0], judge_concepts[1]);
  }
}

/// Full two-direction run: concepts closer in A than B, then B than A.
inline ComparisonReport run_compare(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                    const RunConfig& cfg, const JudgeEmbeddings* judge = nullptr,
                                    std::map<std::string, std::string> digests = {}) {
  const auto pair = prepare_pair(a, b, cfg);
  ComparisonReport rep;
  rep.config = cfg;
  rep.input_digests = std::move(digests);
  rep.items = pair.a.items;
  rep.alignment = pair.alignment;

  const bool needs_distances = cfg.method == "rdx";
  NormalizedDistance norm_a, norm_b;
  if (needs_distances) {
    norm_a = normalize(pairwise_euclidean(pair.a), cfg.distance, cfg.neighbor_index);
    norm_b = normalize(pairwise_euclidean(pair.b), cfg.distance, cfg.neighbor_index);
  }
  for (int d = 0; d < 2; ++d) {
    const auto& src = d == 0 ? pair.a : pair.b;
    const auto& ref = d == 0 ? pair.b : pair.a;
    DirectionRecord rec;
    rec.source = src.model_id;
    rec.reference = ref.model_id;
    const auto set = detail::explain_direction(src, ref, d == 0 ? norm_a : norm_b,
                                               d == 0 ? norm_b : norm_a, cfg, rec);
    for (const auto& g : set.grids) {
      GridRecord gr;
      gr.anchor = rep.items[static_cast<std::size_t>(g.anchor)];
      gr.members = ids_of(g.members, rep.items);
      gr.source_cluster = g.source_cluster;
      gr.target_size = static_cast<int>(g.target_size);
      gr.partial = g.partial();
      rec.grids.push_back(std::move(gr));
    }
    rec.partition = set.labels;
    rec.discarded_label = set.discarded_label;
    rec.discarded = ids_of(set.discarded_cluster, rep.items);
    rep.directions.push_back(std::move(rec));
  }
  score_report(rep, pair, judge);
  rep.projections = {detail::projection_of(pair.a), detail::projection_of(pair.b)};

  if (cfg.method == "rdx" && cfg.distance == DistanceKind::neighborhood) {
    rep.notes.push_back("neighborhood ranks run 1..n-1 per row with a zero diagonal");
  }
  if (cfg.distance == DistanceKind::locally_scaled) {
    rep.notes.push_back("locally scaled distances are row-scaled and asymmetric");
  }
  for (const auto& dir : rep.directions) {
    if (dir.zero_min_cells) {
      rep.notes.push_back(dir.source + ": " + std::to_string(dir.zero_min_cells) +
                          " difference cells had a zero min distance and used the row fallback");
    }
    if (dir.clamped_cells) {
      rep.notes.push_back(dir.source + ": " + std::to_string(dir.clamped_cells) +
                          " affinity exponents were clamped to +-700");
    }
    for (std::size_t g = 0; g < dir.grids.size(); ++g) {
      if (dir.grids[g].partial) {
        rep.notes.push_back(dir.source + ": grid " + std::to_string(g) + " is partial (" +
                            std::to_string(dir.grids[g].members.size()) + " of " +
                            std::to_string(dir.grids[g].target_size) + " items)");
      }
      if (dir.grids[g].members.size() < 2) {
        rep.notes.push_back(dir.source + ": grid " + std::to_string(g) +
                            " has no item pairs; its BSR is reported as 0");
      }
    }
  }
  for (const auto& p : rep.projections) {
    if (p.rank_deficient) rep.notes.push_back(p.model_id + ": PCA projection padded with zeros");
  }
  return rep;
}

/// Re-scores the grids stored in `rep` against the given representations.
inline ComparisonReport evaluate_report(const ComparisonReport& rep, const EmbeddingMatrix& a,
                                        const EmbeddingMatrix& b,
                                        const JudgeEmbeddings* judge = nullptr) {
  if (rep.directions.size() != 2) throw ValidationError("report must hold two directions");
  const auto pair = prepare_pair(a, b, rep.config);
  ComparisonReport out = rep;
  score_report(out, pair, judge);
  return out;
}

struct ConsistencyResult {
  std::string source;
  std::string reference;
  std::size_t shared_items = 0;
  double disagreement = 0.0;
};

/// Cluster disagreement between the partitions of two runs, per direction,
/// over the items both reports cover.
inline std::vector<ConsistencyResult> consistency(const ComparisonReport& r1,
                                                  const ComparisonReport& r2) {
  if (r1.directions.size() != r2.directions.size()) {
    throw ValidationError("reports hold different numbers of directions");
  }
  std::unordered_map<std::string, std::size_t> in_r2;
  for (std::size_t i = 0; i < r2.items.size(); ++i) in_r2.emplace(r2.items[i], i);
  std::vector<std::pair<std::size_t, std::size_t>> shared;
  for (std::size_t i = 0; i < r1.items.size(); ++i) {
    auto it = in_r2.find(r1.items[i]);
    if (it != in_r2.end()) shared.emplace_back(i, it->second);
  }
  if (shared.empty()) throw ValidationError("reports share no items");
  std::vector<ConsistencyResult> out;
  for (std::size_t d = 0; d < r1.directions.size(); ++d) {
    std::vector<int> p, q;
    for (auto [i, j] : shared) {
      p.push_back(r1.directions[d].partition[i]);
      q.push_back(r2.directions[d].partition[j]);
    }
    out.push_back({r1.directions[d].source, r1.directions[d].reference, shared.size(),
                   cluster_disagreement(p, q)});
  }
  return out;
}

}  // namespace rdx
