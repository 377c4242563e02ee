#include "test_util.hpp"

using namespace rdx;
using namespace rdx::test;

namespace {

ExplanationGrid grid_of(std::vector<Index> members) {
  ExplanationGrid g;
  g.anchor = members.front();
  g.members = std::move(members);
  g.target_size = static_cast<Index>(g.members.size());
  return g;
}

double pairwise_clarity(const Matrix& v) {
  double s = 0;
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.rows(); ++j)
      if (i != j) s += v.row(i).dot(v.row(j)) / (v.row(i).norm() * v.row(j).norm());
  return s / static_cast<double>(v.rows() * (v.rows() - 1));
}

Matrix unit_rows(Matrix v) {
  v.rowwise().normalize();
  return v;
}

}  // namespace

TEST(Bsr, IdenticalDistancesScoreZero) {
  const auto r = rank_normalize(pairwise_euclidean(make_embedding("A", random_gaussian(12, 3, 1))));
  const auto res = bsr({grid_of({0, 1, 2, 3}), grid_of({4, 5, 6})}, r, r);
  EXPECT_EQ(res.aggregate, 0.0);
  EXPECT_EQ(res.pairs, 18u);
}

TEST(Bsr, PairCloserInSourceScoresOne) {
  Matrix a(3, 3), b(3, 3);
  a << 0, 1, 2, 1, 0, 2, 2, 1, 0;
  b << 0, 2, 1, 2, 0, 1, 1, 2, 0;
  const auto res = bsr({grid_of({0, 1})}, nd(a), nd(b));
  EXPECT_EQ(res.per_grid[0], 1.0);
  const auto single = bsr({grid_of({2})}, nd(a), nd(b));
  EXPECT_TRUE(single.no_pairs[0]);
  EXPECT_EQ(single.aggregate, 0.0);
  EXPECT_THROW(bsr({grid_of({0, 7})}, nd(a), nd(b)), ValidationError);
  EXPECT_THROW(bsr({grid_of({0, 1})}, nd(a), nd(b, DistanceKind::max_normalized)), ValidationError);
}

TEST(Bsr, EqualsNegativeDifferenceFraction) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = rank_normalize(pairwise_euclidean(make_embedding("A", random_gaussian(30, 3, seed))));
    const auto b =
        rank_normalize(pairwise_euclidean(make_embedding("B", random_gaussian(30, 3, seed + 99))));
    const auto g = locally_biased_diff(a, b, 0.05);
    std::vector<ExplanationGrid> grids = {grid_of({0, 3, 5, 7, 11}), grid_of({1, 2, 29, 17})};
    const auto res = bsr(grids, a, b);
    std::size_t neg = 0, pairs = 0;
    for (const auto& gr : grids)
      for (Index i : gr.members)
        for (Index j : gr.members)
          if (i != j) {
            ++pairs;
            neg += g.data(i, j) < 0;
          }
    EXPECT_EQ(res.aggregate, static_cast<double>(neg) / static_cast<double>(pairs));
    const auto swapped = bsr(grids, b, a);
    EXPECT_LE(res.aggregate + swapped.aggregate, 1.0);
  }
}

TEST(Bsr, SwappedArgumentsSumToOneWithoutTies) {
  Matrix a(3, 3), b(3, 3);
  a << 0, 1, 5, 1, 0, 2, 5, 2, 0;
  b << 0, 3, 4, 3, 0, 1, 4, 1, 0;
  const std::vector<ExplanationGrid> grids = {grid_of({0, 1, 2})};
  EXPECT_DOUBLE_EQ(bsr(grids, nd(a), nd(b)).aggregate + bsr(grids, nd(b), nd(a)).aggregate, 1.0);
  b(0, 1) = b(1, 0) = 1;
  EXPECT_LT(bsr(grids, nd(a), nd(b)).aggregate + bsr(grids, nd(b), nd(a)).aggregate, 1.0);
}

TEST(BsrVariant, NeighborhoodReproducesBsrAndRankInvariance) {
  const auto ea = make_embedding("A", random_gaussian(20, 3, 3));
  const auto eb = make_embedding("B", random_gaussian(20, 3, 4));
  const auto da = pairwise_euclidean(ea);
  const auto db = pairwise_euclidean(eb);
  const std::vector<ExplanationGrid> grids = {grid_of({0, 1, 2, 3, 4, 5}), grid_of({10, 12, 14})};
  const auto plain = bsr(grids, rank_normalize(da), rank_normalize(db));
  EXPECT_EQ(bsr_variant(grids, da, db, DistanceKind::neighborhood).aggregate, plain.aggregate);
  const auto db10 = pairwise_euclidean(make_embedding("B", eb.data * 10.0));
  EXPECT_EQ(bsr_variant(grids, da, db10, DistanceKind::neighborhood).aggregate, plain.aggregate);
  EXPECT_NE(max_normalize(db10).data(0, 1) * 10.0, db10.data(0, 1));
  Matrix dup = eb.data;
  dup.row(1) = dup.row(0);
  dup.row(2) = dup.row(0);
  dup.topRows(10).rowwise() = dup.row(0);
  const auto ddup = pairwise_euclidean(make_embedding("B", dup));
  EXPECT_THROW(bsr_variant(grids, da, ddup, DistanceKind::locally_scaled), DegenerateInputError);
}

TEST(Clarity, ClosedFormCases) {
  Matrix same(4, 3);
  same.rowwise() = Eigen::RowVector3d(1, 2, 3);
  EXPECT_NEAR(*clarity(same), 1.0, 1e-12);
  EXPECT_NEAR(*clarity(Matrix::Identity(2, 2)), 0.0, 1e-15);
  EXPECT_FALSE(clarity(Matrix::Ones(1, 3)).has_value());
  EXPECT_THROW(clarity(Matrix::Zero(2, 3)), DegenerateInputError);
}

TEST(Clarity, MatchesPairwiseCosineMean) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix v = random_gaussian(2 + static_cast<Index>(seed % 9), 6, seed);
    EXPECT_NEAR(*clarity(v), pairwise_clarity(v), 1e-10);
  }
}

TEST(Polysemanticity, IdenticalAndAntipodal) {
  Matrix same(5, 3);
  same.rowwise() = Eigen::RowVector3d(0.3, -1, 2);
  // Any split of identical vectors has parallel sums.
  EXPECT_NEAR(polysemanticity(same, 2), 0.0, 1e-12);
  Matrix anti(6, 3);
  for (Index i = 0; i < 6; ++i) anti.row(i) = (i < 3 ? 1.0 : -1.0) * Eigen::RowVector3d(1, 0, 0);
  EXPECT_NEAR(polysemanticity(anti, 2), 2.0, 1e-12);
}

TEST(Polysemanticity, FullSplitReducesToClarity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix v = unit_rows(random_gaussian(4, 5, seed));
    const double expected = std::clamp(1.0 - *clarity(v), 0.0, 1.0 + 1.0 / 3.0);
    EXPECT_NEAR(polysemanticity(v, 4), expected, 1e-12);
  }
  EXPECT_THROW(polysemanticity(Matrix::Ones(1, 2), 2), ValidationError);
  EXPECT_THROW(polysemanticity(Matrix::Ones(3, 2), 1), ValidationError);
}

TEST(Redundancy, SelfOrthogonalAndOracle) {
  std::vector<Matrix> x = {random_gaussian(4, 6, 1), random_gaussian(3, 6, 2)};
  EXPECT_NEAR(redundancy(x, x), 1.0, 1e-12);

  std::vector<Matrix> a = {Matrix::Zero(2, 4)}, b = {Matrix::Zero(2, 4)};
  a[0].col(0).setOnes();
  b[0].col(1).setOnes();
  EXPECT_NEAR(redundancy(a, b), 0.0, 1e-15);

  const std::vector<Matrix> ca = {random_gaussian(5, 4, 3), random_gaussian(4, 4, 4)};
  const std::vector<Matrix> cb = {random_gaussian(3, 4, 5), random_gaussian(6, 4, 6),
                                  random_gaussian(2, 4, 7)};
  const auto mean_dir = [](const Matrix& v) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(v.cols());
    for (Index i = 0; i < v.rows(); ++i) s += v.row(i);
    return Eigen::RowVectorXd(s / static_cast<double>(v.rows()));
  };
  const auto cos = [](const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q) {
    return p.dot(q) / (p.norm() * q.norm());
  };
  double ab = 0, ba = 0;
  for (const auto& p : ca) {
    double best = -2;
    for (const auto& q : cb) best = std::max(best, cos(mean_dir(p), mean_dir(q)));
    ab += best;
  }
  for (const auto& q : cb) {
    double best = -2;
    for (const auto& p : ca) best = std::max(best, cos(mean_dir(p), mean_dir(q)));
    ba += best;
  }
  const double oracle = 0.5 * (ab / 2.0 + ba / 3.0);
  EXPECT_NEAR(redundancy(ca, cb), oracle, 1e-12);
  EXPECT_NEAR(redundancy(cb, ca), oracle, 1e-12);
}

TEST(Assignment, HungarianSmallCases) {
  Matrix cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = min_cost_assignment(cost);
  double total = 0;
  for (Index r = 0; r < 3; ++r) total += cost(r, a[static_cast<std::size_t>(r)]);
  EXPECT_EQ(total, 5.0);

  Matrix w(2, 3);
  w << 1, 5, 0, 4, 6, 0;
  const auto m = max_weight_assignment(w);
  EXPECT_EQ(m[0], 1);
  EXPECT_EQ(m[1], 0);

  Matrix tall(3, 1);
  tall << 1, 9, 2;
  const auto t = max_weight_assignment(tall);
  EXPECT_EQ(t[1], 0);
  EXPECT_EQ(t[0], -1);
  EXPECT_EQ(t[2], -1);
}

TEST(Assignment, MatchesPermutationBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix cost = random_matrix(5, 5, seed, 0, 10);
    std::vector<Index> perm = {0, 1, 2, 3, 4};
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0;
      for (Index r = 0; r < 5; ++r) s += cost(r, perm[static_cast<std::size_t>(r)]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto a = min_cost_assignment(cost);
    double got = 0;
    for (Index r = 0; r < 5; ++r) got += cost(r, a[static_cast<std::size_t>(r)]);
    EXPECT_NEAR(got, best, 1e-12);
  }
}

TEST(ClusterDisagreement, IdentityRelabelingAndMovedItem) {
  const std::vector<int> p = {0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  EXPECT_EQ(cluster_disagreement(p, p), 0.0);
  std::vector<int> relabeled;
  for (int l : p) relabeled.push_back((l + 1) % 3 + 10);
  EXPECT_EQ(cluster_disagreement(p, relabeled), 0.0);
  std::vector<int> moved = p;
  moved[0] = 1;
  EXPECT_EQ(cluster_disagreement(p, moved), 0.1);
  EXPECT_EQ(cluster_disagreement(moved, p), 0.1);
  EXPECT_THROW(cluster_disagreement(p, {0, 1}), ValidationError);
  EXPECT_THROW(cluster_disagreement({}, {}), ValidationError);
}

TEST(ClusterDisagreement, DifferentClusterCounts) {
  const std::vector<int> p = {0, 0, 1, 1, 2, 2};
  const std::vector<int> q = {0, 0, 0, 0, 1, 1};
  EXPECT_NEAR(cluster_disagreement(p, q), 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(cluster_disagreement(q, p), 2.0 / 6.0, 1e-15);
}
