#include "test_util.hpp"

using namespace rdx;
using namespace rdx::test;

namespace {

EmbeddingMatrix three_blobs(std::uint64_t seed) {
  Matrix x = random_gaussian(45, 4, seed) * 0.2;
  for (Index i = 0; i < 45; ++i) x(i, i / 15) += 8.0;
  return make_embedding("A", x);
}

}  // namespace

TEST(KMeansExplain, GridsFromDistinctBlobs) {
  const auto set = kmeans_explain(three_blobs(1), 3, 9, 0);
  ASSERT_EQ(set.grids.size(), 3u);
  std::set<Index> blobs;
  std::set<Index> seen;
  for (const auto& g : set.grids) {
    ASSERT_EQ(g.members.size(), 9u);
    const Index blob = g.members.front() / 15;
    blobs.insert(blob);
    for (Index i : g.members) {
      EXPECT_EQ(i / 15, blob);
      EXPECT_TRUE(seen.insert(i).second);
    }
  }
  EXPECT_EQ(blobs.size(), 3u);
}

TEST(KMeansExplain, SingleClusterTakesMostCentralItems) {
  const auto emb = make_embedding("A", random_gaussian(30, 3, 2));
  const auto set = kmeans_explain(emb, 1, 5, 0);
  ASSERT_EQ(set.grids.size(), 1u);
  const Eigen::RowVectorXd mean = emb.data.colwise().mean();
  std::vector<std::pair<double, Index>> dist;
  for (Index i = 0; i < 30; ++i) dist.emplace_back((emb.data.row(i) - mean).norm(), i);
  std::sort(dist.begin(), dist.end());
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(set.grids[0].members[r], dist[r].second);
}

TEST(KMeansExplain, DuplicateRowsGiveDistinctMembers) {
  Matrix x = Matrix::Zero(12, 2);
  x.bottomRows(6).setConstant(3.0);
  const auto set = kmeans_explain(make_embedding("A", x), 2, 4, 0);
  for (const auto& g : set.grids) {
    std::set<Index> uniq(g.members.begin(), g.members.end());
    EXPECT_EQ(uniq.size(), g.members.size());
  }
}

TEST(PcaExplain, SingleAxisData) {
  Matrix x = Matrix::Zero(10, 3);
  for (Index i = 0; i < 10; ++i) x(i, 1) = static_cast<double>((i * 7) % 10);
  const auto set = pca_explain(make_embedding("A", x), 1, 3);
  ASSERT_EQ(set.grids.size(), 1u);
  std::vector<Index> members = set.grids[0].members;
  std::vector<Index> expected;
  for (Index i = 0; i < 10; ++i)
    if (x(i, 1) >= 7) expected.push_back(i);
  std::sort(members.begin(), members.end());
  EXPECT_EQ(members, expected);
  EXPECT_THROW(pca_explain(make_embedding("A", x), 2, 3), ValidationError);
}

TEST(PcaExplain, CoefficientsMatchSvdOracleAndAreDeterministic) {
  const auto emb = make_embedding("A", random_gaussian(25, 6, 3));
  const auto basis = pca_basis(emb, 3);
  const Matrix centered = emb.data.rowwise() - emb.data.colwise().mean();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  for (Index c = 0; c < 3; ++c) {
    Vector oracle = svd.matrixU().col(c) * svd.singularValues()(c);
    Index arg = 0;
    svd.matrixV().col(c).cwiseAbs().maxCoeff(&arg);
    if (svd.matrixV()(arg, c) < 0) oracle = -oracle;
    EXPECT_LT((basis.coefficients.col(c) - oracle).cwiseAbs().maxCoeff(), 1e-8);
  }
  const auto s1 = pca_explain(emb, 3, 5);
  const auto s2 = pca_explain(make_embedding("A", emb.data), 3, 5);
  for (std::size_t g = 0; g < 3; ++g) EXPECT_EQ(s1.grids[g].members, s2.grids[g].members);
}

TEST(Nmf, RankOneExactAndMonotone) {
  const Vector u = random_matrix(12, 1, 4, 0.1, 1.0);
  const Vector v = random_matrix(5, 1, 5, 0.1, 1.0);
  const auto emb = make_embedding("A", u * v.transpose());
  const auto basis = nmf_basis(emb, 1, {2000, 1e-14, 0});
  EXPECT_LT(basis.objective_trace.back(), 1e-6);
  for (std::size_t i = 1; i < basis.objective_trace.size(); ++i) {
    EXPECT_LE(basis.objective_trace[i], basis.objective_trace[i - 1] * (1 + 1e-12));
  }
}

TEST(Nmf, MonotoneAndBeatsKMeansFactorization) {
  const Matrix x = random_matrix(20, 6, 6, 0.0, 1.0);
  const auto emb = make_embedding("A", x);
  const auto basis = nmf_basis(emb, 3, {500, 1e-9, 1});
  for (std::size_t i = 1; i < basis.objective_trace.size(); ++i) {
    EXPECT_LE(basis.objective_trace[i], basis.objective_trace[i - 1] * (1 + 1e-12));
  }
  // Rank-3 k-means factorization: one-hot assignments times centroids.
  const auto km = kmeans(x, 3, {10, 300, 1e-6, 0});
  Matrix recon(20, 6);
  for (Index i = 0; i < 20; ++i) recon.row(i) = km.centroids.row(km.labels[static_cast<std::size_t>(i)]);
  EXPECT_LE(basis.objective_trace.back(), (x - recon).squaredNorm());
  EXPECT_NEAR(basis.objective_trace.back(), (x - basis.coefficients * basis.components).squaredNorm(),
              1e-9);
}

TEST(Nmf, RejectsNegativeInput) {
  try {
    nmf_basis(make_embedding("A", random_gaussian(10, 4, 7)), 2);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("pca or kmeans"), std::string::npos);
  }
}

TEST(Baselines, ExplainersShareGridInvariants) {
  const auto emb = make_embedding("A", random_matrix(40, 5, 8, 0.0, 1.0));
  for (const auto& set : {kmeans_explain(emb, 3, 6, 0), pca_explain(emb, 3, 6), nmf_explain(emb, 3, 6)}) {
    ASSERT_EQ(set.grids.size(), 3u);
    for (const auto& g : set.grids) {
      EXPECT_EQ(g.members.front(), g.anchor);
      EXPECT_EQ(g.members.size(), 6u);
      std::set<Index> uniq(g.members.begin(), g.members.end());
      EXPECT_EQ(uniq.size(), 6u);
    }
    EXPECT_EQ(set.labels.size(), 40u);
  }
  EXPECT_EQ(baseline_method_from_string("nmf"), BaselineMethod::nmf);
  EXPECT_THROW(baseline_method_from_string("sae"), ValidationError);
}
