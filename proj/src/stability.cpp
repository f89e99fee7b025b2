#include "psgdlab/stability.hpp"

#include <cmath>
#include <limits>

#include "psgdlab/csv.hpp"
#include "psgdlab/errors.hpp"

namespace psgdlab {

namespace {

// Sub-seed layout for one replicate.
enum Stream : std::uint64_t { kData = 1, kIndex = 2, kReplacement = 3, kRun = 4, kHoldout = 5 };

std::uint64_t max_t(const StabilitySettings& s) {
  if (s.ts.empty()) throw ValidationError("stability: empty t grid");
  std::uint64_t m = 0;
  for (auto t : s.ts) m = std::max(m, t);
  return m;
}

void require_settings(const StabilitySettings& s) {
  if (s.n < 1) throw ValidationError("stability: n must be >= 1");
  if (s.replicates < 2) throw ValidationError("stability: need at least two replicates");
}

const Checkpoint& at(const Trajectory& tr, std::uint64_t t) {
  for (const auto& c : tr.checkpoints)
    if (c.t == t) return c;
  throw std::logic_error("missing checkpoint");
}

double population_risk(const LossModel& model, const Vec& x, const std::vector<Sample>& holdout) {
  if (auto f = model.population_risk(x)) return *f;
  double sum = 0.0;
  for (const Sample& s : holdout) sum += model.loss(x, s);
  return sum / static_cast<double>(holdout.size());
}

std::vector<Sample> draw_holdout(const LossModel& model, std::size_t count, std::uint64_t seed) {
  std::vector<Sample> out;
  if (model.population_risk(Vec::Zero(model.dim()))) return out;
  if (count == 0) throw ValidationError("stability: model needs a held-out set but holdout = 0");
  Rng rng(seed);
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(model.draw(rng));
  return out;
}

struct Replicate {
  Dataset data;
  std::size_t i;
  Sample z_prime;
  std::uint64_t run_seed;
};

Replicate make_replicate(const LossModel& model, const StabilitySettings& s, std::uint64_t k) {
  const std::uint64_t rs = derive_seed(s.seed, k);
  Replicate r{draw_dataset(model, s.n, derive_seed(rs, kData)), counter_index(derive_seed(rs, kIndex), 0, s.n),
              Sample{}, derive_seed(rs, kRun)};
  Rng rng(derive_seed(rs, kReplacement));
  r.z_prime = model.draw(rng);
  return r;
}

RunOptions grid_options(const StabilitySettings& s) {
  RunOptions o;
  o.checkpoint_steps = s.ts;
  o.log_indices = false;
  return o;
}

}  // namespace

CoupledPair coupled_pair(const Dataset& data, std::size_t i, const Sample& z_prime, const LossModel& model,
                         const Mat& p, const ScheduleTrace& schedule, std::uint64_t t_max, std::uint64_t seed,
                         const RunOptions& opts) {
  if (i >= data.size()) throw ValidationError("coupled_pair: index out of range");
  const Dataset swapped = data.replace_one(i, z_prime);
  return {run_multipass(data, model, p, schedule, t_max, seed, opts),
          run_multipass(swapped, model, p, schedule, t_max, seed, opts)};
}

StabilityTheory stability_theory(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                 const ScheduleTrace& schedule, std::size_t n, std::uint64_t t, double theta,
                                 const Mat& sigma) {
  auto r = prof.r(theta);
  auto eta_max = prof.eta_max(theta);
  if (!r || !eta_max) throw ValidationError("stability: preconditioner is not aligned for the requested metric");
  const SymmetricPD m = m_theta(prof.P, geom.H, theta);
  const Mat& pm = prof.P.matrix();
  const Mat pmp = symmetrize(pm * m.matrix() * pm);

  ScheduleTrace replay = schedule;
  replay.t = 0;
  replay.T = 0.0;
  replay.eta_bar = 0.0;
  replay.max_eta = 0.0;
  replay.r = *r;
  for (std::uint64_t s = 0; s < t; ++s) schedule_advance(replay);

  const double nn = static_cast<double>(n);
  const double value = 64.0 *
                       (replay.eta_bar / (8.0 * nn) + (1.0 - std::exp(-replay.T * *r / 4.0)) / (nn * nn * *r * *r)) *
                       trace_prod(pmp, sigma);

  const Mat h_half = geom.H.power_matrix(0.5);
  const double lam_hpmp = sym_eig(symmetrize(h_half * pmp * h_half)).values(0);
  const double lam_minv_h = pencil_spectrum(frac_power(m, -1.0), geom.H).lambda_max;
  const double threshold = 8.0 * geom.beta * std::sqrt(lam_hpmp) * std::sqrt(lam_minv_h) / *r;
  const double cap = std::min(*eta_max, 1.0 / *r);
  const bool admissible = nn >= threshold && replay.max_eta <= cap * (1.0 + 1e-12);
  return {value, admissible, threshold};
}

std::vector<StabilityReport> estimate_pstab(const LossModel& model, const Mat& sigma, const PreconditionerProfile& prof,
                                            const ScheduleTrace& schedule, const StabilitySettings& settings) {
  require_settings(settings);
  const GeometrySpec geom = model.geometry();
  const std::uint64_t t_max = max_t(settings);
  const Mat m = m_theta(prof.P, geom.H, settings.theta).matrix();
  const Mat& p = prof.P.matrix();
  const RunOptions opts = grid_options(settings);
  const std::size_t nt = settings.ts.size();

  std::vector<double> dist(settings.replicates * nt), gap(settings.replicates * nt);
  parallel_for(settings.replicates, settings.jobs, [&](std::size_t k) {
    const Replicate rep = make_replicate(model, settings, k);
    const CoupledPair pair = coupled_pair(rep.data, rep.i, rep.z_prime, model, p, schedule, t_max, rep.run_seed, opts);
    const auto holdout = draw_holdout(model, settings.holdout, derive_seed(derive_seed(settings.seed, k), kHoldout));
    for (std::size_t j = 0; j < nt; ++j) {
      const Vec& x = at(pair.original, settings.ts[j]).x;
      const Vec& y = at(pair.replaced, settings.ts[j]).x;
      dist[k * nt + j] = weighted_norm_sq(x - y, m);
      gap[k * nt + j] = population_risk(model, x, holdout) - empirical_risk(rep.data, model, x);
    }
  });

  std::vector<StabilityReport> out;
  for (std::size_t j = 0; j < nt; ++j) {
    std::vector<double> dj(settings.replicates), gj(settings.replicates);
    for (std::size_t k = 0; k < settings.replicates; ++k) {
      dj[k] = dist[k * nt + j];
      gj[k] = gap[k * nt + j];
    }
    const MeanSe d = mean_se(dj);
    const MeanSe g = mean_se(gj);
    const StabilityTheory th =
        stability_theory(geom, prof, schedule, settings.n, settings.ts[j], settings.theta, sigma);
    StabilityReport r;
    r.n = settings.n;
    r.t = settings.ts[j];
    r.theta = settings.theta;
    r.eps_pstab_sq = d.mean;
    r.std_err = d.se;
    r.gen_gap = g.mean;
    r.gap_se = g.se;
    r.theory_pstab_sq = th.value;
    r.admissible = th.admissible;
    r.replicates = settings.replicates;
    r.sigma_source = settings.sigma_source;
    out.push_back(r);
  }
  return out;
}

std::vector<MeanSe> estimate_gen_gap(const LossModel& model, const Mat& p, const ScheduleTrace& schedule,
                                     const StabilitySettings& settings) {
  require_settings(settings);
  const std::uint64_t t_max = max_t(settings);
  const RunOptions opts = grid_options(settings);
  const std::size_t nt = settings.ts.size();
  std::vector<double> gap(settings.replicates * nt);
  parallel_for(settings.replicates, settings.jobs, [&](std::size_t k) {
    const Replicate rep = make_replicate(model, settings, k);
    const Trajectory tr = run_multipass(rep.data, model, p, schedule, t_max, rep.run_seed, opts);
    const auto holdout = draw_holdout(model, settings.holdout, derive_seed(derive_seed(settings.seed, k), kHoldout));
    for (std::size_t j = 0; j < nt; ++j) {
      const Vec& x = at(tr, settings.ts[j]).x;
      gap[k * nt + j] = population_risk(model, x, holdout) - empirical_risk(rep.data, model, x);
    }
  });
  std::vector<MeanSe> out;
  for (std::size_t j = 0; j < nt; ++j) {
    std::vector<double> gj(settings.replicates);
    for (std::size_t k = 0; k < settings.replicates; ++k) gj[k] = gap[k * nt + j];
    out.push_back(mean_se(gj));
  }
  return out;
}

std::vector<MeanSe> estimate_gen_gap_replace_one(const LossModel& model, const Mat& p,
                                                 const ScheduleTrace& schedule, const StabilitySettings& settings) {
  require_settings(settings);
  const std::uint64_t t_max = max_t(settings);
  const RunOptions opts = grid_options(settings);
  const std::size_t nt = settings.ts.size();
  std::vector<double> gap(settings.replicates * nt);
  parallel_for(settings.replicates, settings.jobs, [&](std::size_t k) {
    const Replicate rep = make_replicate(model, settings, k);
    const CoupledPair pair = coupled_pair(rep.data, rep.i, rep.z_prime, model, p, schedule, t_max, rep.run_seed, opts);
    const Sample& zi = rep.data.samples[rep.i];
    for (std::size_t j = 0; j < nt; ++j)
      gap[k * nt + j] = model.loss(at(pair.replaced, settings.ts[j]).x, zi) - model.loss(at(pair.original, settings.ts[j]).x, zi);
  });
  std::vector<MeanSe> out;
  for (std::size_t j = 0; j < nt; ++j) {
    std::vector<double> gj(settings.replicates);
    for (std::size_t k = 0; k < settings.replicates; ++k) gj[k] = gap[k * nt + j];
    out.push_back(mean_se(gj));
  }
  return out;
}

double risk_decomposition_bound(double opt_gap, double eps_pstab_sq, const SymmetricPD& h, const SymmetricPD& m,
                                const Mat& sigma, double beta) {
  if (opt_gap < 0.0 || eps_pstab_sq < 0.0 || beta < 0.0)
    throw ValidationError("risk_decomposition_bound: inputs must be nonnegative");
  const SymmetricPD m_inv = frac_power(m, -1.0);
  const double eps = std::sqrt(eps_pstab_sq);
  const double lam = pencil_spectrum(m_inv, h).lambda_max;
  return 2.0 * opt_gap + std::sqrt(trace_prod(m_inv.matrix(), sigma)) * eps / 2.0 + 4.0 * beta * lam * eps_pstab_sq;
}

void write_stability_csv(const std::string& path, const std::vector<StabilityReport>& rows) {
  CsvWriter csv(path, {"n", "t", "metric_theta", "eps_pstab_sq", "std_err", "theory_pstab_sq", "gen_gap", "gap_se",
                       "admissible", "replicates", "sigma_source"});
  for (const auto& r : rows)
    csv.row({fmt_num(static_cast<std::uint64_t>(r.n)), fmt_num(r.t), fmt_num(r.theta), fmt_num(r.eps_pstab_sq),
             fmt_num(r.std_err), fmt_num(r.theory_pstab_sq), fmt_num(r.gen_gap), fmt_num(r.gap_se),
             fmt_bool(r.admissible), fmt_num(static_cast<std::uint64_t>(r.replicates)), r.sigma_source});
}

}  // namespace psgdlab
