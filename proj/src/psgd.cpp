#include "psgdlab/psgd.hpp"

#include <algorithm>
#include <cmath>

#include "psgdlab/errors.hpp"

namespace psgdlab {

ScheduleTrace ScheduleTrace::constant(double eta, double r) {
  if (!(eta > 0.0) || !(r >= 0.0)) throw ValidationError("schedule: need eta > 0 and r >= 0");
  ScheduleTrace s;
  s.kind = ScheduleKind::constant;
  s.eta0 = eta;
  s.r = r;
  return s;
}

ScheduleTrace ScheduleTrace::capped_harmonic(double eta0, double c, double r) {
  if (!(eta0 > 0.0) || !(c > 0.0) || !(r >= 0.0))
    throw ValidationError("schedule: need eta0 > 0, c > 0 and r >= 0");
  ScheduleTrace s;
  s.kind = ScheduleKind::capped_harmonic;
  s.eta0 = eta0;
  s.c = c;
  s.r = r;
  return s;
}

double ScheduleTrace::peek() const {
  if (kind == ScheduleKind::constant) return eta0;
  return std::min(eta0, c / (static_cast<double>(t) + 1.0));
}

std::uint64_t ScheduleTrace::burn_in() const {
  if (kind == ScheduleKind::constant) return 0;
  return static_cast<std::uint64_t>(std::max(0.0, std::ceil(c / eta0) - 1.0));
}

double schedule_advance(ScheduleTrace& trace) {
  const double eta = trace.peek();
  trace.eta_bar = std::exp(-trace.r * eta / 4.0) * (trace.eta_bar + eta * eta);
  trace.T += eta;
  trace.max_eta = std::max(trace.max_eta, eta);
  ++trace.t;
  return eta;
}

std::optional<double> capped_harmonic_envelope(double eta0, double c, double r, std::uint64_t t) {
  const double a = r * c / 4.0;
  if (!(a > 1.0)) return std::nullopt;
  const double t0 = std::max(0.0, std::ceil(c / eta0) - 1.0);
  if (static_cast<double>(t) < t0 + 1.0) return std::nullopt;
  const double c_harm = c * c / (a - 1.0);
  const double c_burn = eta0 * eta0 * std::pow(t0 + 2.0, a + 1.0);
  return (c_burn + c_harm) / (static_cast<double>(t) + 1.0);
}

ScheduleTrace proposition_schedule(const PreconditionerProfile& prof, const GeometrySpec& geom,
                                   PropositionVariant variant, double theta) {
  const double beta = geom.beta;
  switch (variant) {
    case PropositionVariant::Pinv: {
      const double r = *prof.r(1.0);
      return ScheduleTrace::capped_harmonic(1.0 / (beta * prof.lambda_max_PH), 8.0 / r, r);
    }
    case PropositionVariant::Hgeom:
      theta = 0.0;
      [[fallthrough]];
    case PropositionVariant::Mtheta: {
      auto c = prof.alignment_at(theta);
      auto r = prof.r(theta);
      if (!c || !r)
        throw ValidationError("preconditioner is not spectrally aligned at this theta; use the Pinv schedule");
      const double eta0 = *c / (beta * prof.lambda_max_PH * std::pow(prof.kappa_PH, 1.0 - theta));
      return ScheduleTrace::capped_harmonic(eta0, 8.0 / *r, *r);
    }
  }
  throw ValidationError("unknown proposition variant");
}

Vec psgd_step(const LossModel& model, const Vec& x, const Sample& z, const Mat& p, double eta) {
  Vec g = model.gradient(x, z);
  return x - eta * (p * g);
}

namespace {

class CheckpointPlan {
 public:
  CheckpointPlan(const RunOptions& opts, std::uint64_t t_max) : opts_(opts), t_max_(t_max) {
    std::sort(opts_.checkpoint_steps.begin(), opts_.checkpoint_steps.end());
  }

  bool wanted(std::uint64_t t) {
    if (t == 0 || t == t_max_) return true;
    if (opts_.checkpoint_stride && t % opts_.checkpoint_stride == 0) return true;
    auto& steps = opts_.checkpoint_steps;
    while (next_ < steps.size() && steps[next_] < t) ++next_;
    return next_ < steps.size() && steps[next_] == t;
  }

 private:
  RunOptions opts_;
  std::uint64_t t_max_;
  std::size_t next_ = 0;
};

template <class Draw>
Trajectory run_loop(const LossModel& model, const Mat& p, ScheduleTrace schedule, std::uint64_t t_max,
                    std::uint64_t seed, const RunOptions& opts, Draw&& draw) {
  const int d = model.dim();
  if (p.rows() != d || p.cols() != d) throw ValidationError("psgd: preconditioner dimension mismatch");
  Trajectory out;
  out.seed = seed;
  Vec x = opts.x0 ? *opts.x0 : Vec::Zero(d);
  if (x.size() != d) throw ValidationError("psgd: x0 dimension mismatch");
  CheckpointPlan plan(opts, t_max);
  Vec g(d);
  if (opts.log_steps) out.steps.reserve(t_max);
  for (std::uint64_t t = 0;; ++t) {
    if (plan.wanted(t)) out.checkpoints.push_back({t, x, schedule.peek(), schedule.T, schedule.eta_bar});
    if (t == t_max) break;
    const Sample& z = draw(t, out);
    const double eta = schedule_advance(schedule);
    if (opts.log_steps) out.steps.push_back(eta);
    model.gradient(x, z, g);
    g *= eta;
    x.noalias() -= p * g;
  }
  out.final = std::move(x);
  out.schedule = schedule;
  return out;
}

}  // namespace

Trajectory run_multipass(const Dataset& data, const LossModel& model, const Mat& p, ScheduleTrace schedule,
                         std::uint64_t t_max, std::uint64_t seed, const RunOptions& opts) {
  if (data.samples.empty()) throw ValidationError("run_multipass: empty dataset");
  const std::size_t n = data.size();
  return run_loop(model, p, schedule, t_max, seed, opts, [&](std::uint64_t t, Trajectory& tr) -> const Sample& {
    const std::size_t i = counter_index(seed, t, n);
    if (opts.log_indices) tr.index_log.push_back(static_cast<std::uint32_t>(i));
    return data.samples[i];
  });
}

Trajectory run_single_pass(const LossModel& model, const Mat& p, ScheduleTrace schedule, std::uint64_t t_max,
                           std::uint64_t seed, const RunOptions& opts) {
  Rng rng(seed);
  Sample current;
  return run_loop(model, p, schedule, t_max, seed, opts, [&](std::uint64_t, Trajectory&) -> const Sample& {
    current = model.draw(rng);
    return current;
  });
}

}  // namespace psgdlab
