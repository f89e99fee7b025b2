#include <gtest/gtest.h>

#include <cmath>

#include "psgdlab/errors.hpp"
#include "psgdlab/stability.hpp"

using namespace psgdlab;

namespace {

QuadraticNoisyModel scalar_model() {
  return make_quadratic(SymmetricPD::identity(1), Mat::Identity(1, 1), 1.0, Vec::Zero(1));
}

}  // namespace

TEST(CoupledPair, IdenticalReplacementGivesIdenticalRuns) {
  Rng rng(1);
  const QuadraticNoisyModel m =
      make_quadratic(random_spd(rng, 3, 5.0), random_spd(rng, 3, 2.0).matrix(), 1.0, Vec::Zero(3));
  const Dataset d = draw_dataset(m, 10, 2);
  const CoupledPair pair =
      coupled_pair(d, 4, d.samples[4], m, Mat::Identity(3, 3), ScheduleTrace::constant(0.2, 0.0), 300, 9);
  EXPECT_EQ(pair.original.final, pair.replaced.final);
  EXPECT_EQ(pair.original.index_log, pair.replaced.index_log);
}

TEST(CoupledPair, ScalarDifferenceFollowsClosedForm) {
  // delta_{t+1} = (1 - eta) delta_t + eta (z_i - z') [i_t == i].
  const QuadraticNoisyModel m = scalar_model();
  const Dataset d = draw_dataset(m, 5, 3);
  const Sample zp{Vec::Constant(1, 10.0), 0.0};
  const double eta = 0.3;
  const CoupledPair pair = coupled_pair(d, 2, zp, m, Mat::Identity(1, 1), ScheduleTrace::constant(eta, 0.0), 200, 4);
  double delta = 0.0;
  for (std::uint32_t i : pair.original.index_log) delta = (1 - eta) * delta + (i == 2 ? eta * (d.samples[2].z(0) - 10.0) : 0.0);
  EXPECT_NEAR(pair.original.final(0) - pair.replaced.final(0), delta, 1e-12 * (1.0 + std::abs(delta)));
  EXPECT_THROW(coupled_pair(d, 5, zp, m, Mat::Identity(1, 1), ScheduleTrace::constant(eta, 0.0), 1, 4),
               ValidationError);
}

TEST(Pstab, ZeroAtTimeZeroAndDeterministicAcrossJobs) {
  Rng rng(5);
  const QuadraticNoisyModel m =
      make_quadratic(random_spd(rng, 2, 3.0), random_spd(rng, 2, 2.0).matrix(), 1.0, Vec::Zero(2));
  const GeometrySpec g = m.geometry();
  const PreconditionerProfile prof = PreconditionerProfile::make(optimal_preconditioner(g.H), g);
  const ScheduleTrace s = proposition_schedule(prof, g, PropositionVariant::Hgeom);
  StabilitySettings st;
  st.n = 16;
  st.ts = {0, 10, 100};
  st.replicates = 50;
  st.seed = 11;
  const auto a = estimate_pstab(m, m.Sigma(), prof, s, st);
  st.jobs = 3;
  const auto b = estimate_pstab(m, m.Sigma(), prof, s, st);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].eps_pstab_sq, 0.0);
  EXPECT_EQ(a[0].theory_pstab_sq, 0.0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].eps_pstab_sq, b[j].eps_pstab_sq);
    EXPECT_EQ(a[j].gen_gap, b[j].gen_gap);
  }
  EXPECT_GT(a[2].eps_pstab_sq, 0.0);
  st.replicates = 1;
  EXPECT_THROW(estimate_pstab(m, m.Sigma(), prof, s, st), ValidationError);
}

TEST(Pstab, TheoryMatchesHandComputationOnScalar) {
  // kappa_ell = 1, P = H = 1: r = 1, tr(PMP Sigma) = 1, eta = 0.1 constant.
  const QuadraticNoisyModel m = scalar_model();
  const GeometrySpec g = m.geometry();
  const PreconditionerProfile prof = PreconditionerProfile::make(SymmetricPD::identity(1), g);
  ASSERT_DOUBLE_EQ(*prof.r(0.0), 1.0);
  const ScheduleTrace s = ScheduleTrace::constant(0.1, 1.0);
  const std::size_t n = 20;
  const std::uint64_t t = 30;
  double bar = 0.0;
  for (std::uint64_t k = 0; k < t; ++k) bar = std::exp(-0.1 / 4.0) * (bar + 0.01);
  const double expected = 64.0 * (bar / (8.0 * n) + (1.0 - std::exp(-3.0 / 4.0)) / (n * n));
  const StabilityTheory th = stability_theory(g, prof, s, n, t, 0.0, m.Sigma());
  EXPECT_NEAR(th.value, expected, 1e-13);
  EXPECT_NEAR(th.n_threshold, 8.0, 1e-12);
  EXPECT_TRUE(th.admissible);
  EXPECT_FALSE(stability_theory(g, prof, s, 7, t, 0.0, m.Sigma()).admissible);
  EXPECT_EQ(stability_theory(g, prof, s, n, 0, 0.0, m.Sigma()).value, 0.0);
}

TEST(Pstab, ScalarEstimateBelowTheory) {
  const QuadraticNoisyModel m = scalar_model();
  const GeometrySpec g = m.geometry();
  const PreconditionerProfile prof = PreconditionerProfile::make(SymmetricPD::identity(1), g);
  const ScheduleTrace s = proposition_schedule(prof, g, PropositionVariant::Hgeom);
  StabilitySettings st;
  st.n = 32;
  st.ts = {16, 256};
  st.replicates = 2000;
  st.seed = 3;
  for (const auto& r : estimate_pstab(m, m.Sigma(), prof, s, st)) {
    EXPECT_TRUE(r.admissible);
    EXPECT_LE(r.eps_pstab_sq, r.theory_pstab_sq + 3.0 * r.std_err) << r.t;
  }
}

TEST(GenGap, ReplaceOneFormAgreesWithDirectForm) {
  const QuadraticNoisyModel m = scalar_model();
  StabilitySettings st;
  st.n = 8;
  st.ts = {50};
  st.replicates = 4000;
  st.seed = 21;
  const Mat p = Mat::Identity(1, 1);
  const ScheduleTrace s = ScheduleTrace::constant(0.2, 0.0);
  const MeanSe a = estimate_gen_gap(m, p, s, st)[0];
  const MeanSe b = estimate_gen_gap_replace_one(m, p, s, st)[0];
  EXPECT_GT(a.mean, 0.0);
  EXPECT_NEAR(a.mean, b.mean, 4.0 * std::hypot(a.se, b.se));
}

TEST(RiskDecomposition, HandValue) {
  // M = H = I_2, Sigma = I_2, beta = 2: 2 * 0.5 + sqrt(2) * 0.1 / 2 + 8 * 0.01.
  const SymmetricPD i2 = SymmetricPD::identity(2);
  EXPECT_NEAR(risk_decomposition_bound(0.5, 0.01, i2, i2, Mat::Identity(2, 2), 2.0),
              1.0 + std::sqrt(2.0) * 0.05 + 0.08, 1e-15);
  EXPECT_THROW(risk_decomposition_bound(-1.0, 0.0, i2, i2, Mat::Identity(2, 2), 1.0), ValidationError);
}
