#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "psgdlab/geometry.hpp"
#include "psgdlab/problems.hpp"

namespace psgdlab {

enum class ScheduleKind { constant, capped_harmonic };

// Step-size rule plus the running accumulators T_t = sum_{s<t} eta_s and
// eta_bar_t = sum_{s<t} exp(-r (T_t - T_s) / 4) eta_s^2.
struct ScheduleTrace {
  ScheduleKind kind = ScheduleKind::constant;
  double eta0 = 0.0;
  double c = 0.0;
  double r = 0.0;
  std::uint64_t t = 0;
  double T = 0.0;
  double eta_bar = 0.0;
  double max_eta = 0.0;

  static ScheduleTrace constant(double eta, double r);
  static ScheduleTrace capped_harmonic(double eta0, double c, double r);

  // eta_t for the current t, without advancing.
  double peek() const;
  // ceil(c / eta0) - 1: last index at which the cap is active.
  std::uint64_t burn_in() const;
};

// Returns eta_t and advances t, T and eta_bar.
double schedule_advance(ScheduleTrace& trace);

// (C_burn + C_harm) / (t + 1) with a = r c / 4 > 1; empty when a <= 1 or t
// is still inside the burn-in.
std::optional<double> capped_harmonic_envelope(double eta0, double c, double r, std::uint64_t t);

enum class PropositionVariant { Pinv, Hgeom, Mtheta };

// eta_t = min(eta0, 8 / (r (t + 1))) with the constants of the matching
// risk bound. Throws ValidationError when Hgeom/Mtheta lack alignment.
ScheduleTrace proposition_schedule(const PreconditionerProfile& prof, const GeometrySpec& geom,
                                   PropositionVariant variant, double theta = 0.0);

Vec psgd_step(const LossModel& model, const Vec& x, const Sample& z, const Mat& p, double eta);

struct Checkpoint {
  std::uint64_t t;
  Vec x;
  double eta;  // step size that will be applied at t
  double T;
  double eta_bar;
};

struct Trajectory {
  std::vector<Checkpoint> checkpoints;
  Vec final;
  std::vector<std::uint32_t> index_log;
  std::uint64_t seed = 0;
  ScheduleTrace schedule;
  std::vector<double> steps;  // eta_0 .. eta_{t_max - 1}
};

struct RunOptions {
  std::optional<Vec> x0;  // zero when unset
  std::uint64_t checkpoint_stride = 0;
  std::vector<std::uint64_t> checkpoint_steps;
  bool log_indices = true;
  bool log_steps = false;
};

// Multipass PSGD: i_t is uniform on {0..n-1}, drawn from the counter-based
// stream (seed, t), so two runs with one seed share their index sequence.
Trajectory run_multipass(const Dataset& data, const LossModel& model, const Mat& p, ScheduleTrace schedule,
                         std::uint64_t t_max, std::uint64_t seed, const RunOptions& opts = {});

// Single pass: a fresh z ~ model at every step.
Trajectory run_single_pass(const LossModel& model, const Mat& p, ScheduleTrace schedule, std::uint64_t t_max,
                           std::uint64_t seed, const RunOptions& opts = {});

}  // namespace psgdlab
