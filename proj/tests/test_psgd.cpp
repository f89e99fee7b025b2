#include <gtest/gtest.h>

#include <cmath>

#include "psgdlab/bounds.hpp"
#include "psgdlab/errors.hpp"
#include "psgdlab/parallel.hpp"
#include "psgdlab/psgd.hpp"
#include "psgdlab/random.hpp"

using namespace psgdlab;

TEST(Schedule, ConstantAccumulatorsMatchDirectSums) {
  ScheduleTrace s = ScheduleTrace::constant(0.1, 0.4);
  for (int k = 0; k < 50; ++k) schedule_advance(s);
  EXPECT_NEAR(s.T, 5.0, 1e-12);
  // eta_bar_t = sum_{s<t} exp(-r eta (t - s) / 4) eta^2
  const double q = std::exp(-0.4 * 0.1 / 4.0);
  double direct = 0.0;
  for (int j = 1; j <= 50; ++j) direct += std::pow(q, j) * 0.01;
  EXPECT_NEAR(s.eta_bar, direct, 1e-15);
}

TEST(Schedule, CappedHarmonicSteps) {
  ScheduleTrace s = ScheduleTrace::capped_harmonic(0.5, 2.0, 1.0);
  EXPECT_EQ(s.burn_in(), 3u);
  const double expected[] = {0.5, 0.5, 0.5, 0.5, 2.0 / 5.0, 2.0 / 6.0};
  for (double e : expected) EXPECT_DOUBLE_EQ(schedule_advance(s), e);
  EXPECT_DOUBLE_EQ(s.max_eta, 0.5);
  EXPECT_EQ(s.t, 6u);
}

TEST(Schedule, HarmonicAccumulatorMatchesDirectSum) {
  ScheduleTrace s = ScheduleTrace::capped_harmonic(0.3, 3.0, 2.0);
  std::vector<double> eta;
  for (int k = 0; k < 400; ++k) eta.push_back(schedule_advance(s));
  double T = 0.0, bar = 0.0;
  for (double e : eta) T += e;
  double tail = 0.0;
  for (int j = static_cast<int>(eta.size()) - 1; j >= 0; --j) {
    tail += eta[j];
    bar += std::exp(-2.0 * tail / 4.0) * eta[j] * eta[j];
  }
  EXPECT_NEAR(s.T, T, 1e-12);
  EXPECT_NEAR(s.eta_bar, bar, 1e-12 * bar);
}

TEST(Schedule, EnvelopeBoundsAccumulatorAfterBurnIn) {
  const double eta0 = 0.2, c = 4.0, r = 2.0;  // a = 2
  ScheduleTrace s = ScheduleTrace::capped_harmonic(eta0, c, r);
  for (std::uint64_t t = 1; t <= 5000; ++t) {
    schedule_advance(s);
    auto env = capped_harmonic_envelope(eta0, c, r, t);
    if (t < s.burn_in() + 1) {
      EXPECT_FALSE(env);
      continue;
    }
    ASSERT_TRUE(env);
    EXPECT_LE(s.eta_bar, *env) << t;
  }
  EXPECT_FALSE(capped_harmonic_envelope(eta0, c, 0.9, 100));  // a = 0.9
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(ScheduleTrace::constant(0.0, 1.0), ValidationError);
  EXPECT_THROW(ScheduleTrace::capped_harmonic(1.0, -1.0, 1.0), ValidationError);
}

TEST(Step, ScalarUpdate) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(1), Mat::Identity(1, 1), 1.0, Vec::Zero(1));
  const Sample z{Vec::Constant(1, 0.0), 0.0};
  const Vec x = psgd_step(m, Vec::Constant(1, 1.0), z, Mat::Identity(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(x(0), 0.5);
  const Vec y = psgd_step(m, Vec::Constant(1, 1.0), z, Mat::Constant(1, 1, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(y(0), 0.75);
}

TEST(Run, SameSeedSameTrajectory) {
  Rng rng(1);
  const QuadraticNoisyModel m =
      make_quadratic(random_spd(rng, 3, 10.0), random_spd(rng, 3, 3.0).matrix(), 1.0, Vec::Zero(3));
  const Dataset d = draw_dataset(m, 20, 2);
  const ScheduleTrace s = ScheduleTrace::constant(0.1, 0.0);
  const Mat p = Mat::Identity(3, 3);
  const Trajectory a = run_multipass(d, m, p, s, 500, 77);
  const Trajectory b = run_multipass(d, m, p, s, 500, 77);
  EXPECT_EQ(a.final, b.final);
  EXPECT_EQ(a.index_log, b.index_log);
  const Trajectory c = run_multipass(d, m, p, s, 500, 78);
  EXPECT_NE(a.index_log, c.index_log);
  for (std::uint64_t t = 0; t < 500; ++t) EXPECT_EQ(a.index_log[t], counter_index(77, t, 20));
}

TEST(Run, CheckpointsAtStrideAndEnds) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 1.0, Vec::Zero(2));
  const Dataset d = draw_dataset(m, 4, 3);
  RunOptions o;
  o.checkpoint_stride = 30;
  o.checkpoint_steps = {7};
  const Trajectory tr = run_multipass(d, m, Mat::Identity(2, 2), ScheduleTrace::constant(0.1, 0.0), 100, 1, o);
  std::vector<std::uint64_t> ts;
  for (const auto& c : tr.checkpoints) ts.push_back(c.t);
  EXPECT_EQ(ts, (std::vector<std::uint64_t>{0, 7, 30, 60, 90, 100}));
  EXPECT_EQ(tr.checkpoints.back().x, tr.final);
}

TEST(Run, SingleSampleConvergesToIt) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 1.0, Vec::Zero(2));
  const Sample z{(Vec(2) << 2.0, -1.0).finished(), 0.0};
  const Trajectory tr =
      run_multipass(Dataset{{z}, 0, ""}, m, Mat::Identity(2, 2), ScheduleTrace::constant(0.5, 0.0), 60, 5);
  EXPECT_LE((tr.final - z.z).norm(), 1e-15 * 1e3);
}

TEST(Run, RejectsDimensionMismatch) {
  const QuadraticNoisyModel m = make_quadratic(SymmetricPD::identity(2), Mat::Identity(2, 2), 1.0, Vec::Zero(2));
  const Dataset d = draw_dataset(m, 4, 3);
  EXPECT_THROW(run_multipass(d, m, Mat::Identity(3, 3), ScheduleTrace::constant(0.1, 0.0), 10, 1), ValidationError);
  EXPECT_THROW(run_multipass(Dataset{}, m, Mat::Identity(2, 2), ScheduleTrace::constant(0.1, 0.0), 10, 1),
               ValidationError);
}

TEST(Recursion, ScalarConstantStepFixedPoint) {
  // M+ = (1 - eta)^2 M + eta^2 s2, fixed point eta s2 / (2 - eta).
  const double eta = 0.2, s2 = 3.0;
  const std::vector<double> risk =
      exact_risk_recursion(Mat::Identity(1, 1), Mat::Constant(1, 1, s2), 1.0, Mat::Identity(1, 1),
                           [&](std::uint64_t) { return eta; }, 400, Vec::Constant(1, 2.0));
  ASSERT_EQ(risk.size(), 401u);
  EXPECT_DOUBLE_EQ(risk[0], 2.0);
  double m = 4.0;
  for (int t = 0; t < 5; ++t) m = (1 - eta) * (1 - eta) * m + eta * eta * s2;
  EXPECT_NEAR(risk[5], 0.5 * m, 1e-14);
  EXPECT_NEAR(risk[400], 0.5 * eta * s2 / (2 - eta), 1e-12);
}

TEST(Recursion, AlphaEntersTheContractionAndTheRisk) {
  // alpha = 2, H = 1: A = 1 - 2 eta, risk = M.
  const std::vector<double> risk =
      exact_risk_recursion(Mat::Identity(1, 1), Mat::Identity(1, 1), 2.0, Mat::Identity(1, 1),
                           [](std::uint64_t) { return 0.1; }, 1, Vec::Constant(1, 1.0));
  EXPECT_NEAR(risk[1], 0.8 * 0.8 + 0.01, 1e-15);
}

TEST(Recursion, MatchesMonteCarlo) {
  Rng rng(9);
  const QuadraticNoisyModel m =
      make_quadratic(random_spd(rng, 2, 4.0), random_spd(rng, 2, 2.0).matrix(), 0.8, Vec::Zero(2));
  const Mat p = Mat::Identity(2, 2);
  const ScheduleTrace s = ScheduleTrace::capped_harmonic(0.5, 5.0, 0.0);
  const Vec x0 = Vec::Constant(2, 1.0);
  const std::vector<double> exact = exact_risk_recursion(m, p, s, 50, x0);
  std::vector<double> mc(4000);
  RunOptions o;
  o.x0 = x0;
  for (std::size_t k = 0; k < mc.size(); ++k)
    mc[k] = population_excess_risk(m, run_single_pass(m, p, s, 50, derive_seed(10, k), o).final);
  const MeanSe ms = mean_se(mc);
  EXPECT_NEAR(ms.mean, exact[50], 4.0 * ms.se);
}
