#include "test_util.hpp"

using namespace rdx;
using namespace rdx::test;

namespace {

double mean_distance(const Matrix& x, const std::vector<Index>& p, const std::vector<Index>& q) {
  double s = 0;
  for (Index i : p)
    for (Index j : q) s += (x.row(i) - x.row(j)).norm();
  return s / static_cast<double>(p.size() * q.size());
}

std::vector<Index> cluster(const PlantedTruth& t, int c) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < t.labels.size(); ++i)
    if (t.labels[i] == c) out.push_back(static_cast<Index>(i));
  return out;
}

}  // namespace

TEST(Synth, ZeroNoiseRelabelIsIdentity) {
  PlantedSpec spec;
  spec.n_per_cluster = 20;
  spec.manipulation.kind = Manipulation::Kind::relabel_noise;
  spec.manipulation.sigma = 0.0;
  const auto pair = generate_pair(spec);
  EXPECT_EQ(pair.a.data, pair.b.data);
  const auto a = rank_normalize(pairwise_euclidean(pair.a));
  const auto b = rank_normalize(pairwise_euclidean(pair.b));
  EXPECT_EQ(locally_biased_diff(a, b, 0.05).data, Matrix::Zero(80, 80));
  EXPECT_FALSE(pair.truth.pair_mask.any());
}

TEST(Synth, MergeGeometry) {
  PlantedSpec spec;
  spec.n_per_cluster = 50;
  spec.noise_sd = 0.5;
  spec.cluster_separation = 10.0;
  const auto pair = generate_pair(spec);
  const auto c0 = cluster(pair.truth, 0), c1 = cluster(pair.truth, 1);
  std::vector<Index> merged = c0, others = cluster(pair.truth, 2);
  merged.insert(merged.end(), c1.begin(), c1.end());
  const auto c3 = cluster(pair.truth, 3);
  others.insert(others.end(), c3.begin(), c3.end());
  EXPECT_LT(mean_distance(pair.b.data, c0, c1), mean_distance(pair.b.data, merged, others));
  EXPECT_GT(mean_distance(pair.a.data, c0, c1), 5 * spec.noise_sd);
}

TEST(Synth, MergeShrinksEveryCrossPair) {
  PlantedSpec spec;
  spec.seed = 7;
  const auto pair = generate_pair(spec);
  const auto da = pairwise_euclidean(pair.a), db = pairwise_euclidean(pair.b);
  std::size_t closer = 0, total = 0;
  for (Index i : cluster(pair.truth, 0)) {
    for (Index j : cluster(pair.truth, 1)) {
      ++total;
      closer += db.data(i, j) < da.data(i, j);
    }
  }
  EXPECT_GE(static_cast<double>(closer) / static_cast<double>(total), 0.99);
}

TEST(Synth, DeterministicAndMaskShape) {
  PlantedSpec spec;
  spec.n_per_cluster = 30;
  spec.manipulation.kind = Manipulation::Kind::split;
  spec.manipulation.cluster = 2;
  spec.seed = 9;
  const auto p1 = generate_pair(spec);
  const auto p2 = generate_pair(spec);
  EXPECT_EQ(p1.a.data, p2.a.data);
  EXPECT_EQ(p1.b.data, p2.b.data);
  const auto& m = p1.truth.pair_mask;
  EXPECT_EQ(m, m.transpose());
  for (Index i = 0; i < m.rows(); ++i) EXPECT_FALSE(m(i, i));
  EXPECT_TRUE(m(60, 89));
  EXPECT_FALSE(m(60, 61));
  // Split halves move apart in B.
  const auto da = pairwise_euclidean(p1.a), db = pairwise_euclidean(p1.b);
  EXPECT_GT(db.data(60, 89), da.data(60, 89));
  spec.seed = 10;
  EXPECT_NE(generate_pair(spec).a.data, p1.a.data);
}

TEST(Synth, SpecValidationAndJson) {
  PlantedSpec spec;
  spec.manipulation.c2 = 0;
  EXPECT_THROW(generate_pair(spec), ValidationError);
  spec = {};
  spec.d = 3;
  EXPECT_THROW(generate_pair(spec), ValidationError);

  spec = {};
  spec.seed = 99;
  spec.manipulation.kind = Manipulation::Kind::split;
  spec.manipulation.axis = 4;
  const nlohmann::json j = spec;
  const auto back = j.get<PlantedSpec>();
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.manipulation.kind, Manipulation::Kind::split);
  EXPECT_EQ(back.manipulation.axis, 4);
  const auto partial = nlohmann::json::parse(R"({"seed": 3})").get<PlantedSpec>();
  EXPECT_EQ(partial.n_per_cluster, 150);
  EXPECT_EQ(partial.seed, 3u);
}
