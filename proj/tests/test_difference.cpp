#include "test_util.hpp"

using namespace rdx;
using namespace rdx::test;

namespace {

NormalizedDistance pair_matrix(double v) {
  Matrix m(2, 2);
  m << 0, v, v, 0;
  return nd(m);
}

NormalizedDistance ranks_of(std::uint64_t seed, Index n = 20, Index d = 3) {
  return rank_normalize(pairwise_euclidean(make_embedding("X", random_gaussian(n, d, seed))));
}

}  // namespace

TEST(LocallyBiasedDiff, NearPairSaturates) {
  const auto g = locally_biased_diff(pair_matrix(1), pair_matrix(101), 0.1);
  EXPECT_NEAR(g.data(0, 1), std::tanh(0.1 * (1.0 - 101.0) / 1.0), 1e-12);
  EXPECT_GT(std::abs(g.data(0, 1)), 0.9999);
  EXPECT_LT(g.data(0, 1), 0.0);
}

TEST(LocallyBiasedDiff, FarPairStaysSmall) {
  const auto g = locally_biased_diff(pair_matrix(500), pair_matrix(600), 0.1);
  EXPECT_NEAR(g.data(0, 1), std::tanh(0.1 * (500.0 - 600.0) / 500.0), 1e-12);
  EXPECT_NEAR(g.data(0, 1), -0.02, 1e-5);
}

TEST(LocallyBiasedDiff, IdenticalInputsGiveZero) {
  const auto r = ranks_of(1);
  const auto g = locally_biased_diff(r, r, 0.05);
  EXPECT_EQ(g.data, Matrix::Zero(20, 20));
  EXPECT_EQ(g.zero_min_cells, 0u);
}

TEST(LocallyBiasedDiff, SignAntisymmetryAndBounds) {
  const auto a = ranks_of(2);
  const auto b = ranks_of(3);
  const auto g = locally_biased_diff(a, b, 0.1);
  const auto gs = locally_biased_diff(b, a, 0.1);
  for (Index i = 0; i < 20; ++i) {
    EXPECT_EQ(g.data(i, i), 0.0);
    for (Index j = 0; j < 20; ++j) {
      if (i == j) continue;
      const double diff = a.data(i, j) - b.data(i, j);
      EXPECT_EQ(g.data(i, j) < 0, diff < 0);
      EXPECT_EQ(g.data(i, j) > 0, diff > 0);
      EXPECT_EQ(g.data(i, j), -gs.data(i, j));
      EXPECT_LE(std::abs(g.data(i, j)), 1.0);
    }
  }
}

TEST(LocallyBiasedDiff, MonotoneInSourceDistance) {
  double prev = -2.0;
  for (double da = 1; da <= 200; da += 1) {
    const auto g = locally_biased_diff(pair_matrix(da), pair_matrix(50), 0.1);
    EXPECT_GE(g.data(0, 1), prev);
    prev = g.data(0, 1);
  }
}

TEST(LocallyBiasedDiff, ZeroMinFallsBackToRowMinimum) {
  Matrix a(3, 3), b(3, 3);
  a << 0, 0, 2, 0, 0, 2, 2, 2, 0;
  b << 0, 1, 4, 1, 0, 4, 4, 4, 0;
  const auto g = locally_biased_diff(nd(a, DistanceKind::max_normalized),
                                     nd(b, DistanceKind::max_normalized), 0.5);
  EXPECT_EQ(g.zero_min_cells, 2u);
  EXPECT_NEAR(g.data(0, 1), std::tanh(0.5 * (0.0 - 1.0) / 2.0), 1e-15);
  EXPECT_LT(g.data(0, 1), 0.0);
}

TEST(LocallyBiasedDiff, RejectsMismatchedInputs) {
  const auto a = ranks_of(4);
  EXPECT_THROW(locally_biased_diff(a, ranks_of(5, 10), 0.1), ValidationError);
  EXPECT_THROW(locally_biased_diff(a, nd(a.data, DistanceKind::max_normalized), 0.1),
               ValidationError);
  EXPECT_THROW(locally_biased_diff(a, a, 0.0), ValidationError);
  EXPECT_THROW(locally_biased_diff(a, a, -1.0), ValidationError);
}

TEST(SubtractionDiff, Examples) {
  Matrix a(3, 3), b(3, 3), e(3, 3);
  a << 0, 1, 2, 1, 0, 2, 2, 1, 0;
  b << 0, 2, 1, 2, 0, 1, 1, 2, 0;
  e << 0, -1, 1, -1, 0, 1, 1, -1, 0;
  EXPECT_EQ(subtraction_diff(nd(a), nd(b)).data, e);
  EXPECT_EQ(subtraction_diff(nd(a), nd(a)).data, Matrix::Zero(3, 3));
  const auto s = subtraction_diff(ranks_of(6), ranks_of(7));
  EXPECT_LE(s.data.cwiseAbs().maxCoeff(), 19.0);
}

TEST(Affinity, ZeroDifferenceGivesOnes) {
  DifferenceMatrix g{Matrix::Zero(4, 4), {"A", "B"}, DiffKind::locally_biased_tanh, 0.1, 0};
  for (double beta : {0.5, 5.0, 50.0}) EXPECT_EQ(affinity(g, beta).data, Matrix::Ones(4, 4));
}

TEST(Affinity, SymmetricNegativeEntry) {
  DifferenceMatrix g{Matrix::Zero(2, 2), {"A", "B"}, DiffKind::locally_biased_tanh, 0.1, 0};
  g.data(0, 1) = g.data(1, 0) = -1.0;
  const auto f = affinity(g, 5.0);
  EXPECT_NEAR(f.data(0, 1), 148.4131591025766, 1e-9);
}

TEST(Affinity, AsymmetricEntryAveraged) {
  DifferenceMatrix g{Matrix::Zero(2, 2), {"A", "B"}, DiffKind::locally_biased_tanh, 0.1, 0};
  g.data(0, 1) = -1.0;
  const auto f = affinity(g, 5.0);
  EXPECT_NEAR(f.data(0, 1), (std::exp(5.0) + 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(f.data(0, 1), 74.707, 1e-3);
}

TEST(Affinity, ExactSymmetryAndClamping) {
  const auto g = locally_biased_diff(ranks_of(8, 30, 4), ranks_of(9, 30, 4), 0.05);
  const auto f = affinity(g, 5.0);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j) EXPECT_EQ(f.data(i, j), f.data(j, i));
  EXPECT_EQ(f.clamped_cells, 0u);

  DifferenceMatrix big{Matrix::Zero(2, 2), {"A", "B"}, DiffKind::subtraction, 0, 0};
  big.data(0, 1) = -1000.0;
  big.data(1, 0) = 1000.0;
  const auto fb = affinity(big, 5.0);
  EXPECT_EQ(fb.clamped_cells, 2u);
  EXPECT_TRUE(fb.data.allFinite());
  EXPECT_THROW(affinity(big, 0.0), ValidationError);
}

TEST(DiffKind, StringRoundTrip) {
  EXPECT_EQ(diff_kind_from_string("tanh"), DiffKind::locally_biased_tanh);
  EXPECT_EQ(diff_kind_from_string("sub"), DiffKind::subtraction);
  EXPECT_THROW(diff_kind_from_string("ratio"), ValidationError);
}
