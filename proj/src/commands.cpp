#include "psgdlab/commands.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "psgdlab/bounds.hpp"
#include "psgdlab/config.hpp"
#include "psgdlab/csv.hpp"
#include "psgdlab/parallel.hpp"
#include "psgdlab/random.hpp"
#include "psgdlab/stability.hpp"
#include "psgdlab/verify.hpp"

namespace psgdlab {

namespace {

Experiment load(const CommandOptions& opt) {
  if (opt.config.empty()) throw ConfigError("--config", "a config file is required");
  ExperimentConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  return build_experiment(cfg);
}

std::string out_dir(const CommandOptions& opt, const Experiment& e) {
  const std::string dir = opt.out.empty() ? e.cfg.outputs : opt.out;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string theta_tag(double theta) {
  std::ostringstream s;
  s << theta;
  return s.str();
}

// Metrics from the config plus the two endpoints, sorted, no duplicates.
std::vector<double> audit_thetas(const ExperimentConfig& cfg) {
  std::set<double> s(cfg.metrics.begin(), cfg.metrics.end());
  s.insert(0.0);
  s.insert(0.5);
  s.insert(1.0);
  return {s.begin(), s.end()};
}

std::string opt_num(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

double n_threshold_pinv(const Experiment& e) { return 4.0 * e.geom.kappa_ell * e.prof.kappa_PH; }

std::optional<double> n_threshold_hgeom(const Experiment& e) {
  const auto r = e.prof.r(0.0);
  if (!r) return std::nullopt;
  return 8.0 * e.geom.beta * e.prof.lambda_max_PH / *r;
}

// Expected tr(PHP Sigma_S) over S: the empirical covariance of n draws has
// mean (1 - 1/n) Sigma.
double tr_phps_s(const Experiment& e, std::size_t n) {
  const Mat& p = e.prof.P.matrix();
  return (1.0 - 1.0 / static_cast<double>(n)) * trace_prod(symmetrize(p * e.geom.H.matrix() * p), e.sigma);
}

struct BoundColumn {
  std::string name;
  std::function<BoundReport(std::uint64_t)> eval;
};

std::vector<BoundColumn> bound_columns(const Experiment& e) {
  std::vector<BoundColumn> cols;
  const std::size_t n = e.cfg.n;
  const double tr_s = tr_phps_s(e, n);
  const EffectiveDimensions ed = effective_dimensions(e.geom.H, e.sigma, e.prof.P, e.geom.H);
  const GeometrySpec& g = e.geom;
  const PreconditionerProfile& p = e.prof;
  cols.push_back({"bound_pinv", [=, &g, &p](std::uint64_t t) { return upper_bound_pinv(n, t, g, p, tr_s, ed.tr_PSigma); }});
  cols.push_back({"bound_hgeom", [=, &g, &p](std::uint64_t t) {
                    return upper_bound_hgeom(n, t, g, p, tr_s, ed.tr_HinvSigma, ed.tr_PHPSigma);
                  }});
  for (double theta : e.cfg.metrics) {
    const SymmetricPD m = m_theta(p.P, g.H, theta);
    const EffectiveDimensions em = effective_dimensions(g.H, e.sigma, p.P, m);
    const MthetaTraces tr{tr_s, em.tr_MinvSigma, em.tr_PMPSigma};
    cols.push_back({"bound_mtheta_" + theta_tag(theta),
                    [=, &g, &p](std::uint64_t t) { return upper_bound_mtheta(n, t, theta, g, p, tr); }});
  }
  return cols;
}

std::vector<std::uint64_t> checkpoint_times(const Experiment& e) {
  std::uint64_t stride = e.cfg.checkpoint_stride;
  if (stride == 0) stride = std::max<std::uint64_t>(1, e.cfg.t_max / 100);
  std::vector<std::uint64_t> ts;
  for (std::uint64_t t = 0; t < e.cfg.t_max; t += stride) ts.push_back(t);
  ts.push_back(e.cfg.t_max);
  return ts;
}

}  // namespace

int cmd_audit(const CommandOptions& opt, std::ostream& log) {
  const Experiment e = load(opt);
  const GeometrySpec& g = e.geom;
  const PreconditionerProfile& p = e.prof;
  std::vector<std::pair<std::string, std::string>> rows;
  auto add = [&](const std::string& k, const std::string& v) { rows.emplace_back(k, v); };

  add("problem", e.model->name());
  add("dim", std::to_string(e.model->dim()));
  add("sigma_source", e.sigma_source);
  // Scale of the curvature matrix as given, before normalization to lambda_max = 1.
  double h_scale = g.scale;
  if (e.quadratic) h_scale = sym_eig(e.cfg.H).values(0);
  if (const auto* lp = dynamic_cast<const LogisticProblem*>(e.model.get())) h_scale = lp->H_raw().lambda_max();
  add("H_scale", fmt_num(h_scale));
  add("alpha", fmt_num(g.alpha));
  add("beta", fmt_num(g.beta));
  add("kappa_ell", fmt_num(g.kappa_ell));
  add("rho_ell", fmt_num(g.rho_ell));
  add("rho_ell_sq", fmt_num(g.rho_ell * g.rho_ell));
  add("P_scale", fmt_num(p.scale));
  for (int i = 0; i < p.pencil.values.size(); ++i) add("pencil_" + std::to_string(i), fmt_num(p.pencil.values(i)));
  add("lambda_min_PH", fmt_num(p.lambda_min_PH));
  add("lambda_max_PH", fmt_num(p.lambda_max_PH));
  add("kappa_PH", fmt_num(p.kappa_PH));
  add("alignment_C", opt_num(p.alignment));
  for (double theta : audit_thetas(e.cfg)) {
    const std::string tag = theta_tag(theta);
    add("alignment_theta_" + tag, opt_num(p.alignment_at(theta)));
    add("r_theta_" + tag, opt_num(p.r(theta)));
    add("eta_max_theta_" + tag, opt_num(p.eta_max(theta)));
    const EffectiveDimensions ed = effective_dimensions(g.H, e.sigma, p.P, m_theta(p.P, g.H, theta));
    add("tr_PMPSigma_theta_" + tag, fmt_num(ed.tr_PMPSigma));
    add("tr_MinvSigma_theta_" + tag, fmt_num(ed.tr_MinvSigma));
  }
  const EffectiveDimensions ed = effective_dimensions(g.H, e.sigma, p.P, g.H);
  add("tr_HinvSigma", fmt_num(ed.tr_HinvSigma));
  add("tr_PSigma", fmt_num(ed.tr_PSigma));
  add("tr_PHPSigma", fmt_num(ed.tr_PHPSigma));

  const std::size_t n = e.cfg.n;
  const double nd = static_cast<double>(n);
  add("n", std::to_string(n));
  add("pinv_aligned", fmt_bool(p.alignment_at(1.0).has_value()));
  add("pinv_n_threshold", fmt_num(n_threshold_pinv(e)));
  add("pinv_admissible", fmt_bool(nd >= n_threshold_pinv(e)));
  const auto nh = n_threshold_hgeom(e);
  add("hgeom_aligned", fmt_bool(nh.has_value()));
  add("hgeom_n_threshold", opt_num(nh));
  add("hgeom_admissible", fmt_bool(nh && nd >= *nh));
  for (double theta : e.cfg.metrics) {
    const std::string tag = theta_tag(theta);
    const bool aligned = p.r(theta).has_value();
    add("mtheta_aligned_" + tag, fmt_bool(aligned));
    if (!aligned) continue;
    const EffectiveDimensions em = effective_dimensions(g.H, e.sigma, p.P, m_theta(p.P, g.H, theta));
    const BoundReport b = upper_bound_mtheta(n, e.cfg.t_max, theta, g, p,
                                             {tr_phps_s(e, n), em.tr_MinvSigma, em.tr_PMPSigma});
    add("mtheta_n_threshold_" + tag, fmt_num(b.input("n_threshold")));
    add("mtheta_admissible_" + tag, fmt_bool(nd >= b.input("n_threshold")));
  }
  if (const auto dd = diagonal_dominance_bound(g)) {
    add("diag_dominance_offdiag", fmt_num(dd->offdiag));
    add("diag_dominance_kappa_bound", fmt_num(dd->kappa_bound));
    add("diag_dominance_alignment_lower", opt_num(dd->alignment_lower));
  } else {
    add("diag_dominance_offdiag", "");
  }
  if (const auto* lp = dynamic_cast<const LogisticProblem*>(e.model.get())) {
    add("logistic_kappa_ell_bound", fmt_num(lp->kappa_ell_bound()));
    // Sigma is estimated at w*. Probe w* +- s e_j and report how far it must be
    // inflated to dominate the gradient covariance there; > 1 means it does not.
    const int d = lp->dim();
    const Mat s_inv_half = SymmetricPD(e.sigma).power_matrix(-0.5);
    const double radius = std::max(1.0, lp->true_weights().norm());
    const std::size_t draws = std::max<std::size_t>(1000, e.cfg.sigma_draws / 4);
    double worst = 0.0;
    std::size_t points = 0;
    for (double s : {0.5 * radius, radius, 2.0 * radius})
      for (int j = 0; j < d; ++j)
        for (double sign : {-1.0, 1.0}) {
          Vec w = lp->true_weights();
          w(j) += sign * s;
          const Mat c = gradient_covariance(*lp, w, draws, derive_seed(e.cfg.seed, 0x5160 + points));
          worst = std::max(worst, sym_eig(symmetrize(s_inv_half * c * s_inv_half)).values(0));
          ++points;
        }
    add("logistic_sigma_grid_points", fmt_num(static_cast<std::uint64_t>(points)));
    add("logistic_sigma_grid_max_ratio", fmt_num(worst));
  }

  const std::string dir = out_dir(opt, e);
  CsvWriter csv(dir + "/audit.csv", {"key", "value"});
  for (const auto& [k, v] : rows) {
    csv.row({k, v});
    log << k << " = " << v << "\n";
  }
  return 0;
}

int cmd_run(const CommandOptions& opt, std::ostream& log) {
  const Experiment e = load(opt);
  const ExperimentConfig& cfg = e.cfg;
  if (cfg.t_max == 0) throw ConfigError("t_max", "must be positive for run");
  const ScheduleTrace schedule = e.schedule();
  const Mat& p = e.prof.P.matrix();
  const std::vector<std::uint64_t> ts = checkpoint_times(e);
  const std::size_t reps = std::max<std::size_t>(1, cfg.replicates);
  const int d = e.model->dim();

  RunOptions ro;
  ro.x0 = cfg.x0;
  ro.checkpoint_steps = ts;
  ro.log_indices = false;

  std::vector<Trajectory> runs(reps);
  std::vector<Dataset> datasets(reps);
  std::vector<double> emp(reps * ts.size());
  std::vector<double> pop(reps * ts.size(), std::nan(""));
  parallel_for(reps, opt.jobs, [&](std::size_t k) {
    const std::uint64_t rs = derive_seed(cfg.seed, k);
    datasets[k] = draw_dataset(*e.model, cfg.n, derive_seed(rs, 1));
    runs[k] = run_multipass(datasets[k], *e.model, p, schedule, cfg.t_max, derive_seed(rs, 2), ro);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const Vec& x = runs[k].checkpoints[j].x;
      emp[k * ts.size() + j] = empirical_risk(datasets[k], *e.model, x);
      if (auto v = e.model->population_excess_risk(x)) pop[k * ts.size() + j] = *v;
    }
  });

  const std::vector<BoundColumn> bounds = bound_columns(e);
  std::vector<std::string> header{"t"};
  if (reps == 1)
    for (int i = 0; i < d; ++i) header.push_back("x_" + std::to_string(i));
  for (const char* h : {"eta", "T", "eta_bar"}) header.push_back(h);
  if (reps == 1) {
    header.push_back("emp_risk");
    header.push_back("pop_excess");
  } else {
    for (const char* h : {"emp_risk_mean", "emp_risk_se", "pop_excess_mean", "pop_excess_se"}) header.push_back(h);
  }
  for (const BoundColumn& b : bounds) header.push_back(b.name);

  const std::string dir = out_dir(opt, e);
  CsvWriter csv(dir + "/run.csv", header);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const Checkpoint& cp = runs[0].checkpoints[j];
    std::vector<std::string> row{fmt_num(cp.t)};
    if (reps == 1)
      for (int i = 0; i < d; ++i) row.push_back(fmt_num(cp.x(i)));
    row.push_back(fmt_num(cp.eta));
    row.push_back(fmt_num(cp.T));
    row.push_back(fmt_num(cp.eta_bar));
    if (reps == 1) {
      row.push_back(fmt_num(emp[j]));
      row.push_back(std::isnan(pop[j]) ? std::string() : fmt_num(pop[j]));
    } else {
      std::vector<double> ej(reps), pj(reps);
      for (std::size_t k = 0; k < reps; ++k) {
        ej[k] = emp[k * ts.size() + j];
        pj[k] = pop[k * ts.size() + j];
      }
      const MeanSe em = mean_se(ej);
      row.push_back(fmt_num(em.mean));
      row.push_back(fmt_num(em.se));
      if (std::isnan(pj[0])) {
        row.push_back("");
        row.push_back("");
      } else {
        const MeanSe pm = mean_se(pj);
        row.push_back(fmt_num(pm.mean));
        row.push_back(fmt_num(pm.se));
      }
    }
    for (const BoundColumn& b : bounds) {
      const BoundReport r = b.eval(cp.t);
      row.push_back(r.admissible ? fmt_num(r.value) : std::string());
    }
    csv.row(row);
  }
  if (reps == 1) write_dataset_csv(dir + "/dataset.csv", datasets[0]);
  log << "run: " << reps << " replicate(s), t_max=" << cfg.t_max << ", " << ts.size() << " checkpoints -> " << dir
      << "/run.csv\n";
  return 0;
}

int cmd_stability(const CommandOptions& opt, std::ostream& log) {
  const Experiment e = load(opt);
  const ExperimentConfig& cfg = e.cfg;
  if (cfg.stability.n.empty() || cfg.stability.t.empty())
    throw ConfigError("stability", "needs non-empty n and t lists");
  const ScheduleTrace schedule = e.schedule();
  std::vector<StabilityReport> rows;
  for (double theta : cfg.metrics) {
    if (!e.prof.r(theta)) {
      log << "stability: metric theta=" << theta << " is not aligned, skipped\n";
      continue;
    }
    for (std::size_t n : cfg.stability.n) {
      StabilitySettings s;
      s.n = n;
      s.ts = cfg.stability.t;
      s.theta = theta;
      s.replicates = std::max<std::size_t>(2, cfg.replicates);
      s.seed = derive_seed(cfg.seed, n);
      s.jobs = opt.jobs;
      s.holdout = cfg.stability.holdout;
      s.sigma_source = e.sigma_source;
      for (StabilityReport& r : estimate_pstab(*e.model, e.sigma, e.prof, schedule, s)) rows.push_back(std::move(r));
    }
  }
  const std::string dir = out_dir(opt, e);
  write_stability_csv(dir + "/stability.csv", rows);
  std::size_t admissible = 0, above = 0;
  for (const StabilityReport& r : rows) {
    if (!r.admissible) continue;
    ++admissible;
    if (r.eps_pstab_sq > r.theory_pstab_sq + 3.0 * r.std_err) ++above;
  }
  log << "stability: " << rows.size() << " rows, " << admissible << " admissible, " << above
      << " above theory + 3 SE -> " << dir << "/stability.csv\n";
  return 0;
}

int cmd_lowerbounds(const CommandOptions& opt, std::ostream& log) {
  const Experiment e = load(opt);
  if (!e.quadratic) throw ConfigError("problem.kind", "lowerbounds needs the quadratic model");
  const QuadraticNoisyModel& q = *e.quadratic;
  const ExperimentConfig& cfg = e.cfg;
  std::vector<std::uint64_t> ts = cfg.lowerbounds.t;
  if (ts.empty()) ts = {cfg.t_max};
  const std::uint64_t t_last = *std::max_element(ts.begin(), ts.end());
  const GeometrySpec& g = e.geom;
  const Mat& h = g.H.matrix();
  const Vec zero = Vec::Zero(q.dim());

  // Risk from x0 = mu under the single-pass lower-bound schedule.
  auto recursion = [&](const PreconditionerProfile& prof) {
    ScheduleTrace s = algo_lower_schedule(prof.lambda_min_PH, prof.lambda_max_PH, g.alpha, g.beta);
    return exact_risk_recursion(h, q.Sigma(), g.alpha, prof.P.matrix(),
                                [&](std::uint64_t) { return schedule_advance(s); }, t_last, zero);
  };

  const std::string dir = out_dir(opt, e);
  CsvWriter csv(dir + "/lowerbounds.csv", {"kind", "eps", "t", "bound", "admissible", "recursion_risk"});
  auto emit = [&](const std::string& kind, const std::string& eps, std::uint64_t t, const BoundReport& b,
                  const std::string& risk) {
    csv.row({kind, eps, fmt_num(t), fmt_num(b.value), fmt_bool(b.admissible), risk});
  };

  const double tr_phps = trace_prod(symmetrize(e.prof.P.matrix() * h * e.prof.P.matrix()), q.Sigma());
  const std::vector<double> base = recursion(e.prof);
  for (std::uint64_t t : ts) emit("algo_lower", "", t, algo_lower(e.prof, tr_phps, t), fmt_num(base[t]));

  for (double eps : cfg.lowerbounds.eps) {
    const BadPreconditioner bp = badP_construction(g.H, q.Sigma(), eps, cfg.preconditioner.statement_form);
    const PreconditionerProfile prof = PreconditionerProfile::make(bp.P, g);
    const std::vector<double> risk = recursion(prof);
    for (std::uint64_t t : ts) emit("badP", fmt_num(eps), t, badP_bound(g.H, q.Sigma(), eps, t), fmt_num(risk[t]));
  }

  for (std::uint64_t t : ts) {
    const RankOneSigma ro = anyP_construction(e.prof.P, g.H, t);
    const std::vector<double> risk =
        exact_risk_recursion(h, ro.sigma, g.alpha, e.prof.P.matrix(),
                             [s = algo_lower_schedule(e.prof.lambda_min_PH, e.prof.lambda_max_PH, g.alpha,
                                                      g.beta)](std::uint64_t) mutable { return schedule_advance(s); },
                             t, zero);
    emit("anyP", "", t, ro.report, fmt_num(risk[t]));
  }

  const double tr_hs = trace_prod(q.H_inv(), q.Sigma());
  emit("minimax", "", 0, minimax_lower(cfg.n, g.alpha, tr_hs), "");
  log << "lowerbounds -> " << dir << "/lowerbounds.csv\n";
  return 0;
}

int cmd_verify(const CommandOptions& opt, std::ostream& log) {
  VerifyOptions vo;
  if (opt.seed) vo.seed = *opt.seed;
  vo.jobs = opt.jobs;
  bool all_ok = true;
  for (const CheckResult& r : run_suite(opt.suite, vo)) {
    log << format_check(r) << "\n" << std::flush;
    all_ok = all_ok && r.passed;
  }
  return all_ok ? 0 : 1;
}

}  // namespace psgdlab
