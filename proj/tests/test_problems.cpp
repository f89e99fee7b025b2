#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "psgdlab/errors.hpp"
#include "psgdlab/parallel.hpp"
#include "psgdlab/problems.hpp"
#include "psgdlab/random.hpp"

using namespace psgdlab;

TEST(Quadratic, ScalarSpecialization) {
  // d = 1, H = 1, alpha = 1: z ~ N(mu, sigma^2).
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(1), Mat::Constant(1, 1, 4.0), 1.0,
                                               Vec::Constant(1, 3.0));
  Rng rng(1);
  std::vector<double> z(100000);
  for (double& v : z) v = m.draw(rng).z(0);
  const MeanSe ms = mean_se(z);
  EXPECT_NEAR(ms.mean, 3.0, 4.0 * ms.se);
  double var = 0.0;
  for (double v : z) var += (v - ms.mean) * (v - ms.mean);
  var /= static_cast<double>(z.size() - 1);
  EXPECT_NEAR(var, 4.0, 0.05 * 4.0);
}

TEST(Quadratic, GradientNoiseHasMeanZeroAndCovarianceSigma) {
  Rng rng(2);
  const SymmetricPD h = random_spd(rng, 3, 5.0);
  const Mat sigma = random_spd(rng, 3, 4.0).matrix();
  const Vec mu = standard_normal(rng, 3);
  const QuadraticNoisyModel m = make_quadratic(h, sigma, 0.7, mu);
  constexpr int draws = 100000;
  Vec mean = Vec::Zero(3);
  Mat second = Mat::Zero(3, 3);
  for (int k = 0; k < draws; ++k) {
    const Vec g = m.gradient(mu, m.draw(rng));
    mean += g;
    second += g * g.transpose();
  }
  mean /= draws;
  const Mat cov = second / draws - mean * mean.transpose();
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(mean(i)), 4.0 * std::sqrt(sigma(i, i) / draws));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(cov(i, j), sigma(i, j), 0.05 * std::sqrt(sigma(i, i) * sigma(j, j))) << i << "," << j;
}

TEST(Quadratic, ExcessRiskClosedForm) {
  const QuadraticNoisyModel m =
      make_quadratic(SymmetricPD::identity(1), Mat::Identity(1, 1), 1.0, Vec::Constant(1, 1.0));
  EXPECT_DOUBLE_EQ(population_excess_risk(m, Vec::Constant(1, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(population_excess_risk(m, Vec::Constant(1, 3.0)), 2.0);
}

TEST(Quadratic, ExcessRiskMatchesMonteCarloLoss) {
  Rng rng(3);
  const QuadraticNoisyModel m =
      make_quadratic(random_spd(rng, 2, 3.0), random_spd(rng, 2, 2.0).matrix(), 1.3, Vec::Zero(2));
  const Vec x = standard_normal(rng, 2);
  std::vector<double> losses(100000);
  for (double& l : losses) l = m.loss(x, m.draw(rng));
  const MeanSe ms = mean_se(losses);
  const double floor = trace_prod(m.H_inv(), m.Sigma()) / (2.0 * m.alpha());
  EXPECT_NEAR(ms.mean - floor, population_excess_risk(m, x), 3.0 * ms.se);
  EXPECT_NEAR(*m.population_risk(x), population_excess_risk(m, x) + floor, 1e-12);
}

TEST(Quadratic, NormalizationPreservesLoss) {
  const SymmetricPD h = SymmetricPD::diagonal((Vec(2) << 4.0, 1.0).finished());
  const QuadraticNoisyModel m = make_quadratic(h, Mat::Identity(2, 2), 0.5, Vec::Zero(2));
  EXPECT_DOUBLE_EQ(m.H().lambda_max(), 1.0);
  EXPECT_DOUBLE_EQ(m.alpha(), 2.0);
  const Sample z{(Vec(2) << 1.0, 2.0).finished(), 0.0};
  EXPECT_NEAR(m.loss(Vec::Zero(2), z), 0.5 * 0.5 * (4.0 + 4.0), 1e-14);
}

TEST(Quadratic, RejectsIndefiniteSigma) {
  Mat s(2, 2);
  s << 1, 2, 2, 1;
  EXPECT_THROW(make_quadratic(SymmetricPD::identity(2), s, 1.0, Vec::Zero(2)), ValidationError);
}

TEST(EmpiricalRisk, SmallCases) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 1.0, Vec::Zero(2));
  const Sample z{(Vec(2) << 1.0, -1.0).finished(), 0.0};
  const Vec x = Vec::Constant(2, 0.5);
  Dataset one{{z}, 0, ""};
  EXPECT_DOUBLE_EQ(empirical_risk(one, m, x), m.loss(x, z));
  Dataset dup{std::vector<Sample>(7, z), 0, ""};
  EXPECT_NEAR(empirical_risk(dup, m, x), m.loss(x, z), 1e-15);
  const Dataset data = draw_dataset(m, 1000, 5);
  std::vector<double> l;
  for (const Sample& s : data.samples) l.push_back(m.loss(x, s));
  // Pairwise summation oracle.
  while (l.size() > 1) {
    std::vector<double> next;
    for (std::size_t i = 0; i + 1 < l.size(); i += 2) next.push_back(l[i] + l[i + 1]);
    if (l.size() % 2) next.push_back(l.back());
    l.swap(next);
  }
  EXPECT_NEAR(empirical_risk(data, m, x), l[0] / 1000.0, 1e-12 * l[0] / 1000.0);
}

TEST(EffectiveDimensions, IdentityAndDiagonal) {
  const SymmetricPD i5 = SymmetricPD::identity(5);
  const EffectiveDimensions e = effective_dimensions(i5, Mat::Identity(5, 5), i5, i5);
  EXPECT_DOUBLE_EQ(e.tr_HinvSigma, 5.0);
  EXPECT_DOUBLE_EQ(e.tr_PSigma, 5.0);
  EXPECT_DOUBLE_EQ(e.tr_PHPSigma, 5.0);
  EXPECT_DOUBLE_EQ(e.tr_PMPSigma, 5.0);
  EXPECT_DOUBLE_EQ(e.tr_MinvSigma, 5.0);
  const SymmetricPD h = SymmetricPD::diagonal((Vec(2) << 1.0, 0.5).finished());
  const Mat sigma = (Vec(2) << 0.2, 0.1).finished().asDiagonal();
  const EffectiveDimensions f = effective_dimensions(h, sigma, optimal_preconditioner(h), h);
  EXPECT_NEAR(f.tr_HinvSigma, 0.4, 1e-15);
}

TEST(EffectiveDimensions, OptimalPreconditionerRecoversInverseCurvature) {
  Rng rng(6);
  const SymmetricPD h = random_spd(rng, 4, 30.0);
  const Mat sigma = random_spd(rng, 4, 5.0).matrix();
  const SymmetricPD p = optimal_preconditioner(h);
  const EffectiveDimensions e = effective_dimensions(h, sigma, p, h);
  EXPECT_NEAR(e.tr_PSigma / pencil_spectrum(p, h).lambda_min, e.tr_HinvSigma, 1e-10 * e.tr_HinvSigma);
}

TEST(SigmaS, DegenerateAndScalarCases) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 2.0, Vec::Zero(2));
  const Sample z{(Vec(2) << 1.0, 1.0).finished(), 0.0};
  const EmpiricalCovariance same = sigma_s_empirical(m, Dataset{std::vector<Sample>(5, z), 0, ""});
  EXPECT_EQ(same.matrix.norm(), 0.0);
  EXPECT_FALSE(same.positive_definite);

  const QuadraticNoisyModel s = make_quadratic(SymmetricPD::identity(1), Mat::Identity(1, 1), 2.0, Vec::Zero(1));
  const Dataset data = draw_dataset(s, 50, 7);
  double mean = 0.0, var = 0.0;
  for (const Sample& x : data.samples) mean += x.z(0) / 50.0;
  for (const Sample& x : data.samples) var += (x.z(0) - mean) * (x.z(0) - mean) / 50.0;
  EXPECT_NEAR(sigma_s_empirical(s, data).matrix(0, 0), 4.0 * var, 1e-12);
}

TEST(SigmaS, ConvergesToSigma) {
  Rng rng(8);
  const Mat sigma = random_spd(rng, 4, 3.0).matrix();
  const QuadraticNoisyModel m = make_quadratic(random_spd(rng, 4, 4.0), sigma, 1.0, Vec::Zero(4));
  const EmpiricalCovariance e = sigma_s_empirical(m, draw_dataset(m, 10000, 9));
  EXPECT_TRUE(e.positive_definite);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(e.matrix(i, j), sigma(i, j), 0.1 * std::sqrt(sigma(i, i) * sigma(j, j)));
}

TEST(Logistic, KappaBoundAndLimits) {
  const LogisticProblem p(SymmetricPD::identity(2), 0.25, Vec::Zero(2));
  EXPECT_DOUBLE_EQ(p.kappa_ell_bound(), 2.0);
  const LogisticProblem big(SymmetricPD::diagonal((Vec(2) << 1.0, 0.1).finished()), 1e8, Vec::Zero(2));
  EXPECT_NEAR(big.kappa_ell_bound(), 1.0, 1e-8);
  const GeometrySpec g = big.geometry();
  EXPECT_LE((g.H.matrix() - Mat::Identity(2, 2)).norm(), 1e-8);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  const LogisticProblem p(random_spd(rng, 3, 4.0), 0.1, standard_normal(rng, 3));
  for (int k = 0; k < 10; ++k) {
    const Sample z = p.draw(rng);
    const Vec w = standard_normal(rng, 3);
    const Vec g = p.gradient(w, z);
    const Mat hs = p.hessian(w, z);
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e(i) = 1e-6;
      EXPECT_NEAR(g(i), (p.loss(w + e, z) - p.loss(w - e, z)) / 2e-6, 1e-6);
      const Vec dg = (p.gradient(w + e, z) - p.gradient(w - e, z)) / 2e-6;
      EXPECT_LE((dg - hs.col(i)).norm(), 1e-5);
    }
  }
}

TEST(Logistic, PerSampleHessianAboveLowerSandwich) {
  Rng rng(11);
  const LogisticProblem p(random_spd(rng, 3, 5.0), 0.2, standard_normal(rng, 3));
  const GeometrySpec g = p.geometry();
  const Mat h_inv_half = g.H.power_matrix(-0.5);
  int above_upper = 0;
  for (int k = 0; k < 500; ++k) {
    const Sample z = p.draw(rng);
    const Mat a = p.hessian(standard_normal(rng, 3), z);
    const Vec ev = sym_eig(symmetrize(h_inv_half * a * h_inv_half)).values;
    EXPECT_GE(ev(ev.size() - 1), g.alpha * (1.0 - 1e-10));
    above_upper += ev(0) > g.beta * (1.0 + 1e-10);
  }
  // Only the expected Hessian is dominated by beta H; single heavy-tailed
  // features routinely exceed it.
  EXPECT_GT(above_upper, 0);
}

TEST(Dataset, ReplaceOneAndCsvRoundTrip) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 1.0, Vec::Zero(2));
  const Dataset d = draw_dataset(m, 5, 12);
  const Sample z{Vec::Constant(2, 9.0), 0.0};
  const Dataset r = d.replace_one(3, z);
  EXPECT_EQ(r.samples[3].z, z.z);
  for (int i : {0, 1, 2, 4}) EXPECT_EQ(r.samples[i].z, d.samples[i].z);
  EXPECT_THROW(d.replace_one(5, z), ValidationError);
  const auto path = (std::filesystem::temp_directory_path() / "psgdlab_ds.csv").string();
  write_dataset_csv(path, d);
  const Dataset back = read_dataset_csv(path);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].z, d.samples[i].z);
    EXPECT_EQ(back.samples[i].y, d.samples[i].y);
  }
}
