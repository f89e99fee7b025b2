#include "psgdlab/verify.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "psgdlab/bounds.hpp"
#include "psgdlab/geometry.hpp"
#include "psgdlab/parallel.hpp"
#include "psgdlab/problems.hpp"
#include "psgdlab/psgd.hpp"
#include "psgdlab/random.hpp"
#include "psgdlab/stability.hpp"

namespace psgdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string g6(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// P = H^{-1/2} Q diag(s) Q^T H^{-1/2} with s spanning [1/kappa, 1], so kappa(PH)
// is exactly kappa and P does not commute with H in general.
SymmetricPD pencil_preconditioner(Rng& rng, const SymmetricPD& h, double kappa) {
  const SymmetricPD s = random_spd(rng, h.dim(), kappa);
  const Mat h_inv_half = h.power_matrix(-0.5);
  return SymmetricPD(symmetrize(h_inv_half * s.matrix() * h_inv_half));
}

struct FuzzInstance {
  GeometrySpec geom;
  PreconditionerProfile prof;
  Mat a;
  Vec x;
  Vec y;
};

// d <= 8, kappa_ell in [1, 16], kappa(PH) < rho^2, H and P with arbitrary scale.
FuzzInstance fuzz_instance(Rng& rng) {
  const int d = uniform_int(rng, 1, 8);
  const double kappa_ell = uniform(rng, 0.0, 1.0) < 0.1 ? 1.0 : uniform(rng, 1.0, 16.0);
  const double alpha = log_uniform(rng, 0.1, 2.0);
  const SymmetricPD h_raw = random_spd(rng, d, log_uniform(rng, 1.0, 100.0)).scaled(log_uniform(rng, 0.3, 3.0));
  GeometrySpec geom = GeometrySpec::make(h_raw, alpha, alpha * kappa_ell);
  const double kmax = std::isinf(geom.rho_ell) ? 50.0 : geom.rho_ell * geom.rho_ell;
  const double kappa_ph = 1.0 + uniform(rng, 0.0, 0.999) * (kmax - 1.0);
  const SymmetricPD p_raw = pencil_preconditioner(rng, geom.H, kappa_ph).scaled(log_uniform(rng, 0.3, 3.0));
  PreconditionerProfile prof = PreconditionerProfile::make(p_raw, geom);
  Mat a = sample_sandwiched_hessian(rng, geom);
  const double scale = log_uniform(rng, 0.01, 100.0);
  Vec x = scale * standard_normal(rng, d);
  Vec y = scale * standard_normal(rng, d);
  return {std::move(geom), std::move(prof), std::move(a), std::move(x), std::move(y)};
}

CheckResult finish(CheckResult r, const Timer& timer) {
  r.seconds = timer.seconds();
  return r;
}

QuadraticNoisyModel random_quadratic(Rng& rng, int d, double kappa_h, double kappa_sigma, double alpha,
                                     bool random_mu = true) {
  const SymmetricPD h = random_spd(rng, d, kappa_h);
  const Mat sigma = random_spd(rng, d, kappa_sigma).matrix() * log_uniform(rng, 0.3, 3.0);
  const Vec mu = random_mu ? standard_normal(rng, d) : Vec::Zero(d);
  return make_quadratic(h, sigma, alpha, mu);
}

// E over S of tr(PHP Sigma_S) for the quadratic model: (1 - 1/n) tr(PHP Sigma).
double expected_tr_phps_s(const Mat& p, const Mat& h, const Mat& sigma, std::size_t n) {
  return (1.0 - 1.0 / static_cast<double>(n)) * trace_prod(symmetrize(p * h * p), sigma);
}

}  // namespace

CheckResult verify_cocoercivity(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 1));
  constexpr std::size_t kInstances = 30000;
  double worst = kInf;
  std::size_t failures = 0;
  std::size_t transposed_failures = 0;
  for (std::size_t k = 0; k < kInstances; ++k) {
    const FuzzInstance inst = fuzz_instance(rng);
    const InequalityCheck c = check_cocoercivity(inst.geom, inst.prof, inst.a, inst.x, inst.y);
    worst = std::min(worst, (c.lhs - c.rhs) / (1.0 + std::abs(c.rhs)));
    if (!c.holds) ++failures;
    if (!check_cocoercivity(inst.geom, inst.prof, inst.a, inst.x, inst.y, true).holds) ++transposed_failures;
  }
  const double secs = timer.seconds();
  CheckResult r{"cocoercivity_fuzz", failures == 0 && secs < 60.0,
                "instances=30000 failures=" + std::to_string(failures) + " min_rel_slack=" + g6(worst) +
                    " seconds=" + g6(secs) + " (transposed inner product fails on " +
                    std::to_string(transposed_failures) + ")",
                "all hold with slack >= -1e-10, runtime < 60 s"};
  return finish(r, timer);
}

CheckResult verify_contractivity(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 2));
  constexpr std::size_t kInstances = 30000;
  const double thetas[] = {0.0, 0.5, 1.0};
  double worst = -kInf;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < kInstances; ++k) {
    const FuzzInstance inst = fuzz_instance(rng);
    const double theta = thetas[k % 3];
    const double eta = uniform(rng, 0.0, 1.0) * *inst.prof.eta_max(theta);
    const ContractivityCheck c = check_contractivity(inst.geom, inst.prof, inst.a, theta, eta, inst.x, inst.y);
    worst = std::max(worst, c.ratio - c.bound);
    if (!c.holds) ++failures;
  }
  CheckResult r{"contractivity_fuzz", failures == 0,
                "instances=30000 failures=" + std::to_string(failures) + " max(ratio-bound)=" + g6(worst),
                "ratio <= 1 - eta r on every instance"};
  return finish(r, timer);
}

CheckResult verify_pl_growth(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 3));
  constexpr std::size_t kInstances = 10000;
  double worst = kInf;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < kInstances; ++k) {
    const FuzzInstance inst = fuzz_instance(rng);
    const InequalityCheck c = pl_growth_check(inst.geom, inst.prof, inst.a, inst.x, inst.y);
    worst = std::min(worst, (c.lhs - c.rhs) / (1.0 + std::abs(c.rhs)));
    if (!c.holds) ++failures;
  }
  CheckResult r{"pl_growth_fuzz", failures == 0,
                "instances=10000 failures=" + std::to_string(failures) + " min_rel_slack=" + g6(worst),
                "all hold with slack >= -1e-10"};
  return finish(r, timer);
}

CheckResult verify_recursion_oracle(const VerifyOptions& opt) {
  Timer timer;
  constexpr std::size_t kReplicates = 10000;
  const std::vector<std::uint64_t> ts{50, 200};
  Rng rng(derive_seed(opt.seed, 4));

  struct Config {
    QuadraticNoisyModel model;
    Mat p;
    ScheduleTrace schedule;
    Vec x0;
  };
  std::vector<Config> configs;
  {
    const SymmetricPD one = SymmetricPD::identity(1);
    configs.push_back({make_quadratic(one, Mat::Identity(1, 1), 1.0, Vec::Zero(1)), Mat::Identity(1, 1),
                       ScheduleTrace::constant(0.1, 0.0), Vec::Constant(1, 2.0)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 2, 4.0, 3.0, 1.0);
    Mat p = optimal_preconditioner(m.H()).matrix();
    configs.push_back({m, p, ScheduleTrace::constant(0.2, 0.0), Vec::Zero(2)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 3, 10.0, 5.0, 1.0);
    configs.push_back({m, Mat::Identity(3, 3), ScheduleTrace::capped_harmonic(0.5, 5.0, 0.0), Vec::Zero(3)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 4, 20.0, 4.0, 0.5);
    Mat p = q_approx_preconditioner(rng, m.H(), 2.0).matrix();
    const double lmax = pencil_spectrum(SymmetricPD(p), m.H()).lambda_max;
    configs.push_back({m, p, ScheduleTrace::constant(0.6 / (0.5 * lmax), 0.0), standard_normal(rng, 4)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 4, 5.0, 2.0, 2.0);
    Mat p = diagonal_preconditioner(m.H()).matrix();
    const double lmax = pencil_spectrum(SymmetricPD(p), m.H()).lambda_max;
    configs.push_back({m, p, ScheduleTrace::capped_harmonic(0.5 / (2.0 * lmax), 3.0, 0.0), Vec::Zero(4)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 2, 50.0, 2.0, 1.0);
    const BadPreconditioner bp = badP_construction(m.H(), m.Sigma(), 0.25);
    const PencilSpectrum ps = pencil_spectrum(bp.P, m.H());
    configs.push_back({m, bp.P.matrix(), algo_lower_schedule(ps.lambda_min, ps.lambda_max), Vec::Zero(2)});
  }

  double worst = 0.0;
  std::ostringstream detail;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const Config& cfg = configs[c];
    const std::vector<double> exact = exact_risk_recursion(cfg.model, cfg.p, cfg.schedule, ts.back(), cfg.x0);
    std::vector<double> risk(kReplicates * ts.size());
    RunOptions ro;
    ro.x0 = cfg.x0;
    ro.checkpoint_steps = ts;
    ro.log_indices = false;
    const std::uint64_t cseed = derive_seed(opt.seed, 400 + c);
    parallel_for(kReplicates, opt.jobs, [&](std::size_t k) {
      const Trajectory tr = run_single_pass(cfg.model, cfg.p, cfg.schedule, ts.back(), derive_seed(cseed, k), ro);
      for (std::size_t j = 0; j < ts.size(); ++j)
        for (const auto& cp : tr.checkpoints)
          if (cp.t == ts[j]) risk[k * ts.size() + j] = population_excess_risk(cfg.model, cp.x);
    });
    for (std::size_t j = 0; j < ts.size(); ++j) {
      std::vector<double> rj(kReplicates);
      for (std::size_t k = 0; k < kReplicates; ++k) rj[k] = risk[k * ts.size() + j];
      const MeanSe ms = mean_se(rj);
      const double rel = std::abs(ms.mean - exact[ts[j]]) / exact[ts[j]];
      worst = std::max(worst, rel);
      detail << " c" << c << "t" << ts[j] << "=" << g6(rel);
    }
  }
  const double secs = timer.seconds();
  CheckResult r{"recursion_vs_monte_carlo", worst <= 0.05 && secs < 300.0,
                "max_rel_err=" + g6(worst) + detail.str() + " seconds=" + g6(secs),
                "relative error <= 0.05 at t in {50, 200} on 6 configs, runtime < 300 s"};
  return finish(r, timer);
}

CheckResult verify_algo_lower(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 5));
  constexpr std::uint64_t kTmax = 10000;
  double worst = kInf;
  double worst_halved = kInf;
  std::size_t violations = 0;
  std::uint64_t first_bad_t = 0;
  for (int c = 0; c < 10; ++c) {
    const int d = 2 + c % 5;
    const SymmetricPD h = random_spd(rng, d, log_uniform(rng, 1.0, 20.0));
    const Mat sigma = random_spd(rng, d, log_uniform(rng, 1.0, 10.0)).matrix() * log_uniform(rng, 0.5, 2.0);
    const GeometrySpec geom = GeometrySpec::make(h, 1.0, 1.0);
    const SymmetricPD p = SymmetricPD::from_eigen(random_orthogonal(rng, d),
                                                  random_spd(rng, d, log_uniform(rng, 1.0, 10.0)).eigenvalues());
    const PreconditionerProfile prof = PreconditionerProfile::make(p, geom);
    ScheduleTrace sched = algo_lower_schedule(prof.lambda_min_PH, prof.lambda_max_PH);
    const std::vector<double> risk = exact_risk_recursion(
        geom.H.matrix(), sigma, 1.0, prof.P.matrix(), [&](std::uint64_t) { return schedule_advance(sched); }, kTmax,
        Vec::Zero(d));
    const double tr_phps = trace_prod(symmetrize(prof.P.matrix() * geom.H.matrix() * prof.P.matrix()), sigma);
    const auto t_lo = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(4.0 * prof.kappa_PH)));
    for (std::uint64_t t = t_lo; t <= kTmax; ++t) {
      const BoundReport b = algo_lower(prof, tr_phps, t);
      const double ratio = risk[t] / b.value;
      worst = std::min(worst, ratio);
      worst_halved = std::min(worst_halved, 2.0 * ratio);
      if (risk[t] < b.value * (1.0 - 1e-12)) {
        if (violations == 0) first_bad_t = t;
        ++violations;
      }
    }
  }
  CheckResult r{"algo_lower_bound", violations == 0,
                "min risk/bound=" + g6(worst) + " violations=" + std::to_string(violations) +
                    " first_violation_t=" + std::to_string(first_bad_t) +
                    " min risk/(bound/(2 alpha))=" + g6(worst_halved),
                "risk >= tr(PHP Sigma)/(lambda_max lambda_min t) for all t in [floor(4 kappa), 1e4] on 10 configs"};
  return finish(r, timer);
}

CheckResult verify_badP_trend(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 6));
  constexpr std::uint64_t kT = 1000;
  const double eps_list[] = {0.5, 0.25, 0.125};
  std::size_t violations = 0;
  double worst = kInf;
  std::ostringstream detail;

  // Risk at kT for each eps; bound violations accumulate into the totals.
  auto run_config = [&](int d, double kappa_h, bool gate) {
    const SymmetricPD h = random_spd(rng, d, kappa_h);
    const Mat sigma = random_spd(rng, d, log_uniform(rng, 1.0, 10.0)).matrix();
    const GeometrySpec geom = GeometrySpec::make(h, 1.0, 1.0);
    std::vector<double> at_t;
    for (double eps : eps_list) {
      const BadPreconditioner bp = badP_construction(geom.H, sigma, eps);
      const PreconditionerProfile prof = PreconditionerProfile::make(bp.P, geom);
      ScheduleTrace sched = algo_lower_schedule(prof.lambda_min_PH, prof.lambda_max_PH, geom.alpha, geom.beta);
      const std::vector<double> risk = exact_risk_recursion(
          geom.H.matrix(), sigma, geom.alpha, prof.P.matrix(), [&](std::uint64_t) { return schedule_advance(sched); },
          kT, Vec::Zero(d));
      at_t.push_back(risk[kT]);
      if (!gate) continue;
      for (std::uint64_t t = 1; t <= kT; ++t) {
        const BoundReport b = badP_bound(geom.H, sigma, eps, t);
        if (!b.admissible) continue;
        worst = std::min(worst, risk[t] / b.value);
        if (risk[t] < b.value * (1.0 - 1e-12)) ++violations;
      }
    }
    return at_t;
  };
  auto increasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) return false;
    return true;
  };

  // The construction puts lambda_min(P_eps H) at eps, which needs eps <= lambda_min(H):
  // kappa(H) <= 2 keeps every eps in the list inside that regime.
  bool monotone = true;
  for (int c = 0; c < 5; ++c) {
    const std::vector<double> at_t = run_config(2 + c % 4, log_uniform(rng, 1.0, 2.0), true);
    monotone = monotone && increasing(at_t);
    detail << " c" << c << ":" << g6(at_t[0]) << "," << g6(at_t[1]) << "," << g6(at_t[2]);
  }
  // Outside it (eps > lambda_min(H)) the trend is not implied; reported only.
  int wide_non_monotone = 0;
  for (int c = 0; c < 20; ++c)
    if (!increasing(run_config(2 + c % 4, log_uniform(rng, 2.0, 20.0), false))) ++wide_non_monotone;
  detail << " | kappa(H) in [2,20]: non-monotone in " << wide_non_monotone << "/20 (not gated)";

  CheckResult r{"badP_trend", monotone && violations == 0,
                std::string("monotone=") + (monotone ? "yes" : "no") + " bound_violations=" +
                    std::to_string(violations) + " min risk/bound=" + g6(worst) +
                    " min risk/(bound/(2 alpha))=" + g6(2.0 * worst) + " risk_t1000 per config (eps=1/2,1/4,1/8)" + detail.str(),
                "risk at t=1e3 increases as eps decreases and risk >= (1-1/d) tr(H Sigma)/(eps t) at admissible t"};
  return finish(r, timer);
}

CheckResult verify_rank_one(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 7));
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int d = uniform_int(rng, 2, 8);
    const SymmetricPD h = random_spd(rng, d, log_uniform(rng, 1.0, 100.0));
    const SymmetricPD p = random_spd(rng, d, log_uniform(rng, 1.0, 100.0));
    const RankOneSigma ro = anyP_construction(p, h, 1);
    worst = std::max(worst, std::abs(ro.ratio - ro.lambda_max_sq) / ro.lambda_max_sq);
  }
  CheckResult r{"rank_one_sigma_equality", worst <= 1e-9, "max_rel_err=" + g6(worst),
                "tr(PHP Sigma) = lambda_max(PH)^2 tr(H^-1 Sigma) within 1e-9 on 1e3 pairs"};
  return finish(r, timer);
}

CheckResult verify_stability_grid(const VerifyOptions& opt) {
  Timer timer;
  constexpr std::size_t kReplicates = 10000;
  Rng rng(derive_seed(opt.seed, 8));
  const QuadraticNoisyModel model = random_quadratic(rng, 2, 4.0, 3.0, 1.0);
  const GeometrySpec geom = model.geometry();
  const PreconditionerProfile prof = PreconditionerProfile::make(pencil_preconditioner(rng, geom.H, 2.0), geom);
  const std::vector<std::size_t> ns{32, 64, 128, 256};
  const std::vector<std::uint64_t> ts{32, 64, 128, 256, 512, 1024};

  struct Variant {
    double theta;
    PropositionVariant schedule;
  };
  const Variant variants[] = {{0.0, PropositionVariant::Hgeom}, {1.0, PropositionVariant::Pinv}};
  std::size_t admissible = 0;
  std::size_t violations = 0;
  double worst = -kInf;
  for (const Variant& v : variants) {
    const ScheduleTrace sched = proposition_schedule(prof, geom, v.schedule);
    for (std::size_t n : ns) {
      StabilitySettings s;
      s.n = n;
      s.ts = ts;
      s.theta = v.theta;
      s.replicates = kReplicates;
      s.seed = derive_seed(opt.seed, 800 + n + static_cast<std::size_t>(v.theta));
      s.jobs = opt.jobs;
      for (const StabilityReport& rep : estimate_pstab(model, model.Sigma(), prof, sched, s)) {
        if (!rep.admissible) continue;
        ++admissible;
        worst = std::max(worst, (rep.eps_pstab_sq - 3.0 * rep.std_err) / rep.theory_pstab_sq);
        if (rep.eps_pstab_sq > rep.theory_pstab_sq + 3.0 * rep.std_err) ++violations;
      }
    }
  }
  const double secs = timer.seconds();
  CheckResult r{"stability_bound_grid", admissible > 0 && violations == 0 && secs < 900.0,
                "admissible_points=" + std::to_string(admissible) + " violations=" + std::to_string(violations) +
                    " max (est-3se)/theory=" + g6(worst) + " seconds=" + g6(secs),
                "estimate <= theory + 3 SE at every admissible (n, t), runtime < 900 s"};
  return finish(r, timer);
}

CheckResult verify_multipass_upper(const VerifyOptions& opt) {
  Timer timer;
  constexpr std::size_t kReplicates = 1000;
  constexpr std::uint64_t kTmax = 2000;
  Rng rng(derive_seed(opt.seed, 9));

  struct Config {
    QuadraticNoisyModel model;
    SymmetricPD p;
  };
  std::vector<Config> configs;
  {
    QuadraticNoisyModel m = random_quadratic(rng, 2, 4.0, 3.0, 1.0);
    SymmetricPD p = optimal_preconditioner(m.H());
    configs.push_back({std::move(m), std::move(p)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 3, 8.0, 3.0, 0.5);
    SymmetricPD p = pencil_preconditioner(rng, m.H(), 3.0);
    configs.push_back({std::move(m), std::move(p)});
  }
  {
    QuadraticNoisyModel m = random_quadratic(rng, 4, 4.0, 5.0, 2.0);
    configs.push_back({std::move(m), SymmetricPD::identity(4)});
  }

  std::size_t admissible = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const QuadraticNoisyModel& model = configs[c].model;
    const GeometrySpec geom = model.geometry();
    const PreconditionerProfile prof = PreconditionerProfile::make(configs[c].p, geom);
    const Mat& p = prof.P.matrix();
    const Mat& h = geom.H.matrix();
    const EffectiveDimensions ed = effective_dimensions(geom.H, model.Sigma(), prof.P, geom.H);
    const double n_pinv = 4.0 * geom.kappa_ell * prof.kappa_PH;
    const double n_hgeom = 8.0 * geom.beta / *prof.r(0.0) * prof.lambda_max_PH;
    const auto n = static_cast<std::size_t>(std::ceil(std::max(n_pinv, n_hgeom)));
    const double tr_s = expected_tr_phps_s(p, h, model.Sigma(), n);
    for (PropositionVariant variant : {PropositionVariant::Pinv, PropositionVariant::Hgeom}) {
      const ScheduleTrace sched = proposition_schedule(prof, geom, variant);
      RunOptions ro;
      ro.checkpoint_stride = 100;
      ro.log_indices = false;
      const std::size_t n_ck = kTmax / 100 + 1;
      std::vector<double> risk(kReplicates * n_ck);
      const std::uint64_t cseed = derive_seed(opt.seed, 900 + 2 * c + (variant == PropositionVariant::Hgeom));
      parallel_for(kReplicates, opt.jobs, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(cseed, k);
        const Dataset data = draw_dataset(model, n, derive_seed(rs, 1));
        const Trajectory tr = run_multipass(data, model, p, sched, kTmax, derive_seed(rs, 2), ro);
        for (std::size_t j = 0; j < n_ck; ++j) risk[k * n_ck + j] = population_excess_risk(model, tr.checkpoints[j].x);
      });
      for (std::size_t j = 0; j < n_ck; ++j) {
        const std::uint64_t t = 100 * j;
        const BoundReport b = variant == PropositionVariant::Pinv
                                  ? upper_bound_pinv(n, t, geom, prof, tr_s, ed.tr_PSigma)
                                  : upper_bound_hgeom(n, t, geom, prof, tr_s, ed.tr_HinvSigma, ed.tr_PHPSigma);
        if (!b.admissible) continue;
        std::vector<double> rj(kReplicates);
        for (std::size_t k = 0; k < kReplicates; ++k) rj[k] = risk[k * n_ck + j];
        const MeanSe ms = mean_se(rj);
        ++admissible;
        worst = std::max(worst, (ms.mean - 3.0 * ms.se) / b.value);
        if (ms.mean > b.value + 3.0 * ms.se) ++violations;
      }
    }
  }
  CheckResult r{"multipass_vs_proposition_bounds", admissible > 0 && violations == 0,
                "admissible_checkpoints=" + std::to_string(admissible) + " violations=" + std::to_string(violations) +
                    " max (mean-3se)/bound=" + g6(worst),
                "Monte-Carlo excess risk <= bound + 3 SE at every admissible checkpoint"};
  return finish(r, timer);
}

CheckResult verify_minimax_witness(const VerifyOptions& opt) {
  Timer timer;
  constexpr std::size_t kDatasets = 10000;
  constexpr std::size_t kN = 20;
  Rng rng(derive_seed(opt.seed, 10));
  const QuadraticNoisyModel model = random_quadratic(rng, 3, 5.0, 4.0, 0.7);
  std::vector<double> risk(kDatasets);
  parallel_for(kDatasets, opt.jobs, [&](std::size_t k) {
    const Dataset data = draw_dataset(model, kN, derive_seed(opt.seed, 1000 + k));
    Vec mean = Vec::Zero(model.dim());
    for (const Sample& s : data.samples) mean += s.z;
    mean /= static_cast<double>(kN);
    risk[k] = population_excess_risk(model, mean);
  });
  const MeanSe ms = mean_se(risk);
  const double tr = trace_prod(model.H_inv(), model.Sigma());
  const double theory = tr / (2.0 * model.alpha() * static_cast<double>(kN));
  const double lower = minimax_lower(kN, model.alpha(), tr).value;
  const bool agree = std::abs(ms.mean - theory) <= 3.0 * ms.se;
  const bool dominates = theory > lower && ms.mean - 3.0 * ms.se > lower;
  CheckResult r{"minimax_witness", agree && dominates,
                "mean=" + g6(ms.mean) + " se=" + g6(ms.se) + " theory=" + g6(theory) + " minimax_lower=" + g6(lower),
                "|mean - tr/(2 alpha n)| <= 3 SE and mean > 0.14 tr/(n alpha)"};
  return finish(r, timer);
}

CheckResult verify_schedule_lemmas(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 11));
  constexpr std::uint64_t kTmax = 10000;
  std::size_t harmonic_fail = 0;
  double harmonic_worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double r = log_uniform(rng, 0.05, 2.0);
    const double c = 4.0 / r * uniform(rng, 1.1, 5.0);
    const double eta0 = log_uniform(rng, 0.01, 2.0);
    ScheduleTrace s = ScheduleTrace::capped_harmonic(eta0, c, r);
    bool ok = true;
    while (s.t < kTmax) {
      schedule_advance(s);
      if (auto env = capped_harmonic_envelope(eta0, c, r, s.t)) {
        harmonic_worst = std::max(harmonic_worst, s.eta_bar / *env);
        if (s.eta_bar > *env * (1.0 + 1e-12)) ok = false;
      }
    }
    if (!ok) ++harmonic_fail;
  }
  std::size_t upper_fail = 0;
  std::size_t lower_fail = 0;
  double upper_worst = 0.0;
  double upper_worst_t0 = 0.0;
  double upper_worst_alt = 0.0;
  double lower_worst = kInf;
  std::uint64_t first_violation = 0;
  for (int k = 0; k < 20; ++k) {
    const double a = uniform(rng, 0.1, 1.0);
    const double b = a * uniform(rng, 1.5, 10.0);
    const double big_b = uniform(rng, 0.1, 10.0);
    const double r0 = uniform(rng, 0.0, 10.0);
    const DecayCheck dc = verify_decay_recursion(a, b, big_b, r0, kTmax);
    upper_worst = std::max(upper_worst, dc.worst_upper_ratio);
    upper_worst_t0 = std::max(upper_worst_t0, dc.worst_upper_ratio_after_t0);
    upper_worst_alt = std::max(upper_worst_alt, dc.worst_upper_ratio_b_over_ea);
    if (!dc.upper_ok && first_violation == 0) first_violation = dc.first_upper_violation;
    lower_worst = std::min(lower_worst, dc.worst_lower_ratio);
    if (!dc.upper_ok) ++upper_fail;
    if (!dc.lower_ok) ++lower_fail;
  }
  CheckResult r{"schedule_lemmas", harmonic_fail == 0 && upper_fail == 0 && lower_fail == 0,
                "capped_harmonic_fail=" + std::to_string(harmonic_fail) + " max eta_bar/env=" + g6(harmonic_worst) +
                    " decay_upper_fail=" + std::to_string(upper_fail) + " max r/env=" + g6(upper_worst) +
                    " first_violation_t=" + std::to_string(first_violation) +
                    " max r/env (t>=t0)=" + g6(upper_worst_t0) + " max r/env (b/(e a) constant)=" +
                    g6(upper_worst_alt) +
                    " decay_lower_fail=" + std::to_string(lower_fail) + " min r/env=" + g6(lower_worst),
                "all envelopes hold on 20 + 20 random parameterizations for t <= 1e4"};
  return finish(r, timer);
}

CheckResult verify_pl_risk(const VerifyOptions& opt) {
  Timer timer;
  constexpr std::size_t kReplicates = 2000;
  constexpr std::uint64_t kT = 8000;
  Rng rng(derive_seed(opt.seed, 12));
  const QuadraticNoisyModel model = random_quadratic(rng, 3, 5.0, 3.0, 1.0);
  const GeometrySpec geom = model.geometry();
  const PreconditionerProfile prof = PreconditionerProfile::make(optimal_preconditioner(geom.H), geom);
  const double mu = geom.alpha;
  const double beta = geom.beta;
  const double tr = trace_prod(model.H_inv(), model.Sigma());
  const double lam = pencil_spectrum(frac_power(SymmetricPD(model.Sigma()), -1.0), geom.H).lambda_max;
  const auto n_min = static_cast<std::size_t>(std::ceil(32.0 * beta * lam));
  const ScheduleTrace sched = proposition_schedule(prof, geom, PropositionVariant::Pinv);

  std::size_t violations = 0;
  std::ostringstream detail;
  for (std::size_t n : {n_min, 4 * n_min}) {
    std::vector<double> excess(kReplicates), opt_gap(kReplicates);
    RunOptions ro;
    ro.log_indices = false;
    const std::uint64_t cseed = derive_seed(opt.seed, 1200 + n);
    parallel_for(kReplicates, opt.jobs, [&](std::size_t k) {
      const std::uint64_t rs = derive_seed(cseed, k);
      const Dataset data = draw_dataset(model, n, derive_seed(rs, 1));
      const Trajectory tr_run = run_multipass(data, model, prof.P.matrix(), sched, kT, derive_seed(rs, 2), ro);
      Vec zbar = Vec::Zero(model.dim());
      for (const Sample& s : data.samples) zbar += s.z;
      zbar /= static_cast<double>(n);
      excess[k] = population_excess_risk(model, tr_run.final);
      opt_gap[k] = 0.5 * model.alpha() * weighted_norm_sq(tr_run.final - zbar, model.H().matrix());
    });
    const MeanSe ex = mean_se(excess);
    const MeanSe og = mean_se(opt_gap);
    const BoundReport b = pl_risk_bound(n, og.mean, mu, beta, tr, lam);
    if (!b.admissible || ex.mean > b.value + 3.0 * ex.se) ++violations;
    detail << " n" << n << ":excess=" << g6(ex.mean) << "+-" << g6(ex.se) << ",bound=" << g6(b.value);
  }
  CheckResult r{"pl_risk_bound", violations == 0, "violations=" + std::to_string(violations) + detail.str(),
                "excess risk <= pl_risk_bound + 3 SE for n at and above 32 beta lambda_max(H Sigma^-1)"};
  return finish(r, timer);
}

CheckResult verify_accumulators(const VerifyOptions& opt) {
  Timer timer;
  Rng rng(derive_seed(opt.seed, 13));
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const QuadraticNoisyModel model = random_quadratic(rng, 2, 3.0, 2.0, 1.0);
    const double r = log_uniform(rng, 0.01, 1.0);
    const ScheduleTrace sched = k % 2 ? ScheduleTrace::constant(log_uniform(rng, 0.01, 0.5), r)
                                      : ScheduleTrace::capped_harmonic(0.5, 4.0 / r * 1.5, r);
    const Dataset data = draw_dataset(model, 16, derive_seed(opt.seed, 1300 + k));
    RunOptions ro;
    ro.log_steps = true;
    const Trajectory tr = run_multipass(data, model, Mat::Identity(2, 2), sched, 2000, 7, ro);
    double big_t = 0.0;
    for (double e : tr.steps) big_t += e;
    double eta_bar = 0.0;
    double ts = 0.0;
    for (double e : tr.steps) {
      eta_bar += std::exp(-r * (big_t - ts) / 4.0) * e * e;
      ts += e;
    }
    worst = std::max(worst, std::abs(tr.schedule.T - big_t) / big_t);
    worst = std::max(worst, std::abs(tr.schedule.eta_bar - eta_bar) / eta_bar);
  }
  CheckResult r{"accumulator_exactness", worst <= 1e-10, "max_rel_err=" + g6(worst),
                "T and eta_bar match direct sums within 1e-10"};
  return finish(r, timer);
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "geometry") {
    known = true;
    out.push_back(verify_cocoercivity(opt));
    out.push_back(verify_contractivity(opt));
    out.push_back(verify_pl_growth(opt));
  }
  if (all || suite == "schedules") {
    known = true;
    out.push_back(verify_schedule_lemmas(opt));
    out.push_back(verify_accumulators(opt));
  }
  if (all || suite == "oracles") {
    known = true;
    out.push_back(verify_recursion_oracle(opt));
    out.push_back(verify_rank_one(opt));
    out.push_back(verify_minimax_witness(opt));
  }
  if (all || suite == "bounds") {
    known = true;
    out.push_back(verify_algo_lower(opt));
    out.push_back(verify_badP_trend(opt));
    out.push_back(verify_stability_grid(opt));
    out.push_back(verify_multipass_upper(opt));
    out.push_back(verify_pl_risk(opt));
  }
  if (!known) throw std::invalid_argument("unknown verify suite '" + suite + "'");
  return out;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS " : "FAIL ") << r.name << " | observed: " << r.observed << " | required: " << r.required
    << " | " << g6(r.seconds) << " s";
  return s.str();
}

}  // namespace psgdlab
