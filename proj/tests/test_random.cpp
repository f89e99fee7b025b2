#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "psgdlab/random.hpp"

using namespace psgdlab;

TEST(CounterIndex, PureFunctionOfSeedAndCounter) {
  for (std::uint64_t t = 0; t < 100; ++t) EXPECT_EQ(counter_index(42, t, 17), counter_index(42, t, 17));
  int differs = 0;
  for (std::uint64_t t = 0; t < 100; ++t) differs += counter_index(42, t, 1000) != counter_index(43, t, 1000);
  EXPECT_GT(differs, 90);
}

TEST(CounterIndex, UniformChiSquare) {
  constexpr std::size_t n = 10;
  constexpr std::size_t draws = 100000;
  std::vector<double> counts(n, 0.0);
  for (std::uint64_t t = 0; t < draws; ++t) counts[counter_index(7, t, n)] += 1.0;
  double chi2 = 0.0;
  const double expect = static_cast<double>(draws) / n;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 27.88);  // 0.999 quantile, 9 dof
}

TEST(CounterIndex, SingleElementAlwaysZero) {
  for (std::uint64_t t = 0; t < 50; ++t) EXPECT_EQ(counter_index(t * 31, t, 1), 0u);
}

TEST(DeriveSeed, DistinctChildren) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(RandomSpd, ConditionNumberAndScaleArePinned) {
  Rng rng(1);
  for (int d : {1, 2, 6}) {
    const SymmetricPD a = random_spd(rng, d, 25.0);
    EXPECT_NEAR(a.lambda_max(), 1.0, 1e-12);
    if (d > 1) EXPECT_NEAR(a.condition_number(), 25.0, 1e-9);
  }
}

TEST(RandomOrthogonal, IsOrthogonal) {
  Rng rng(2);
  const Mat q = random_orthogonal(rng, 6);
  EXPECT_LE((q.transpose() * q - Mat::Identity(6, 6)).norm(), 1e-12);
}

TEST(RandomContraction, SpectrumInUnitInterval) {
  Rng rng(3);
  const Mat w = random_contraction(rng, 5);
  Eigen::SelfAdjointEigenSolver<Mat> es(w);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LE(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
}
