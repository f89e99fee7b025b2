#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psgdlab/geometry.hpp"
#include "psgdlab/parallel.hpp"
#include "psgdlab/problems.hpp"
#include "psgdlab/psgd.hpp"

namespace psgdlab {

struct CoupledPair {
  Trajectory original;  // trained on S
  Trajectory replaced;  // trained on S with sample i swapped for z'
};

// Both runs consume the same index stream (same seed), so they differ only
// at steps where i_t == i.
CoupledPair coupled_pair(const Dataset& data, std::size_t i, const Sample& z_prime, const LossModel& model,
                         const Mat& p, const ScheduleTrace& schedule, std::uint64_t t_max, std::uint64_t seed,
                         const RunOptions& opts = {});

struct StabilitySettings {
  std::size_t n = 0;
  std::vector<std::uint64_t> ts;
  double theta = 0.0;  // metric M_theta
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t holdout = 2000;  // held-out draws for f when no closed form exists
  std::string sigma_source = "population";
};

struct StabilityReport {
  std::size_t n = 0;
  std::uint64_t t = 0;
  double theta = 0.0;
  double eps_pstab_sq = 0.0;
  double std_err = 0.0;
  double gen_gap = 0.0;
  double gap_se = 0.0;
  double theory_pstab_sq = 0.0;
  bool admissible = false;
  std::size_t replicates = 0;
  std::string sigma_source;
};

struct StabilityTheory {
  double value;
  bool admissible;
  double n_threshold;
};

// 64 (eta_bar_t / (8n) + (1 - exp(-T_t r / 4)) / (n^2 r^2)) tr(P M P Sigma),
// with the accumulators replayed from `schedule` using the metric's own r.
StabilityTheory stability_theory(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                 const ScheduleTrace& schedule, std::size_t n, std::uint64_t t, double theta,
                                 const Mat& sigma);

// One report per t in settings.ts. Each replicate draws a fresh S, a uniform
// index i and an independent z'.
std::vector<StabilityReport> estimate_pstab(const LossModel& model, const Mat& sigma, const PreconditionerProfile& prof,
                                            const ScheduleTrace& schedule, const StabilitySettings& settings);

// f(x_t) - f_S(x_t) averaged over fresh datasets.
std::vector<MeanSe> estimate_gen_gap(const LossModel& model, const Mat& p, const ScheduleTrace& schedule,
                                     const StabilitySettings& settings);

// The replace-one form l(x_t(S^i), z_i) - l(x_t(S), z_i), with i uniform.
std::vector<MeanSe> estimate_gen_gap_replace_one(const LossModel& model, const Mat& p,
                                                 const ScheduleTrace& schedule, const StabilitySettings& settings);

// 2 opt + sqrt(tr(M^{-1} Sigma)) eps / 2 + 4 beta lambda_max(H M^{-1}) eps^2.
double risk_decomposition_bound(double opt_gap, double eps_pstab_sq, const SymmetricPD& h, const SymmetricPD& m,
                                const Mat& sigma, double beta);

void write_stability_csv(const std::string& path, const std::vector<StabilityReport>& rows);

}  // namespace psgdlab
