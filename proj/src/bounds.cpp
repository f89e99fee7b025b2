#include "psgdlab/bounds.hpp"

#include <cmath>
#include <limits>

#include "psgdlab/csv.hpp"
#include "psgdlab/errors.hpp"

namespace psgdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double nd(std::size_t n) { return static_cast<double>(n); }
double td(std::uint64_t t) { return static_cast<double>(t); }

double upper_display(double r, double tr_s, double tr_geo, std::size_t n, std::uint64_t t) {
  const double tp1 = td(t) + 1.0;
  return 64.0 / r * (tr_s / tp1 + tr_geo * (1.0 / std::sqrt(nd(n) * tp1) + 1.0 / nd(n)));
}

}  // namespace

void advance_moment(MomentState& state, const Mat& h, const Mat& sigma, double alpha, const Mat& p, double eta) {
  const Eigen::Index d = h.rows();
  const Mat a = Mat::Identity(d, d) - (eta * alpha) * (p * h);
  state.M = symmetrize(a * state.M * a.transpose() + (eta * eta) * (p * sigma * p));
  ++state.t;
}

std::vector<double> exact_risk_recursion(const Mat& h, const Mat& sigma, double alpha, const Mat& p,
                                         const StepRule& step, std::uint64_t t_max, const Vec& x0_minus_mu) {
  const Eigen::Index d = h.rows();
  if (h.cols() != d || sigma.rows() != d || sigma.cols() != d || p.rows() != d || p.cols() != d ||
      x0_minus_mu.size() != d)
    throw ValidationError("exact_risk_recursion: dimension mismatch");
  MomentState state{x0_minus_mu * x0_minus_mu.transpose(), 0};
  std::vector<double> risk;
  risk.reserve(t_max + 1);
  risk.push_back(0.5 * alpha * trace_prod(h, state.M));
  for (std::uint64_t s = 0; s < t_max; ++s) {
    advance_moment(state, h, sigma, alpha, p, step(s));
    risk.push_back(0.5 * alpha * trace_prod(h, state.M));
  }
  return risk;
}

std::vector<double> exact_risk_recursion(const QuadraticNoisyModel& model, const Mat& p, ScheduleTrace schedule,
                                         std::uint64_t t_max, const Vec& x0) {
  return exact_risk_recursion(
      model.H().matrix(), model.Sigma(), model.alpha(), p, [&](std::uint64_t) { return schedule_advance(schedule); },
      t_max, x0 - model.mu());
}

double BoundReport::input(const std::string& key) const {
  for (const auto& [k, v] : inputs)
    if (k == key) return v;
  throw std::out_of_range("BoundReport has no input '" + key + "'");
}

BoundReport upper_bound_pinv(std::size_t n, std::uint64_t t, const GeometrySpec& geom,
                             const PreconditionerProfile& prof, double tr_PHPSigmaS, double tr_PSigma) {
  const double r = *prof.r(1.0);
  const ScheduleTrace sched = proposition_schedule(prof, geom, PropositionVariant::Pinv);
  const double n_min = 4.0 * geom.kappa_ell * prof.kappa_PH;
  BoundReport out{"upper_bound_pinv", upper_display(r, tr_PHPSigmaS, tr_PSigma, n, t), {}, false};
  out.admissible = nd(n) >= n_min && t >= sched.burn_in() + 1;
  out.inputs = {{"n", nd(n)}, {"t", td(t)}, {"r", r}, {"tr_PHPSigmaS", tr_PHPSigmaS}, {"tr_PSigma", tr_PSigma},
                {"n_threshold", n_min}, {"t0", td(sched.burn_in())}};
  return out;
}

BoundReport upper_bound_hgeom(std::size_t n, std::uint64_t t, const GeometrySpec& geom,
                              const PreconditionerProfile& prof, double tr_PHPSigmaS, double tr_HinvSigma,
                              double tr_PHPSigma) {
  const double geo = std::sqrt(tr_HinvSigma * tr_PHPSigma);
  BoundReport out{"upper_bound_hgeom", kInf, {}, false};
  out.inputs = {{"n", nd(n)}, {"t", td(t)}, {"tr_PHPSigmaS", tr_PHPSigmaS}, {"tr_HinvSigma", tr_HinvSigma},
                {"tr_PHPSigma", tr_PHPSigma}};
  auto r = prof.r(0.0);
  if (!r || !(*r > 0.0)) return out;  // misaligned: no finite bound
  const ScheduleTrace sched = proposition_schedule(prof, geom, PropositionVariant::Hgeom);
  const double n_min = 8.0 * geom.beta / *r * prof.lambda_max_PH;
  out.value = upper_display(*r, tr_PHPSigmaS, geo, n, t);
  out.admissible = nd(n) >= n_min && t >= sched.burn_in() + 1;
  out.inputs.push_back({"r", *r});
  out.inputs.push_back({"alignment", *prof.alignment});
  out.inputs.push_back({"n_threshold", n_min});
  out.inputs.push_back({"t0", td(sched.burn_in())});
  return out;
}

BoundReport upper_bound_mtheta(std::size_t n, std::uint64_t t, double theta, const GeometrySpec& geom,
                               const PreconditionerProfile& prof, const MthetaTraces& traces) {
  const double geo = std::sqrt(traces.tr_MinvSigma * traces.tr_PMPSigma);
  BoundReport out{"upper_bound_mtheta", kInf, {}, false};
  out.inputs = {{"n", nd(n)}, {"t", td(t)}, {"theta", theta}, {"tr_PHPSigmaS", traces.tr_PHPSigmaS},
                {"tr_MinvSigma", traces.tr_MinvSigma}, {"tr_PMPSigma", traces.tr_PMPSigma}};
  auto r = prof.r(theta);
  if (!r || !(*r > 0.0)) return out;
  const ScheduleTrace sched = proposition_schedule(prof, geom, PropositionVariant::Mtheta, theta);
  const SymmetricPD m = m_theta(prof.P, geom.H, theta);
  const Mat& pm = prof.P.matrix();
  const Mat h_half = geom.H.power_matrix(0.5);
  const double lam_hpmp = sym_eig(symmetrize(h_half * pm * m.matrix() * pm * h_half)).values(0);
  const double lam_minv_h = pencil_spectrum(frac_power(m, -1.0), geom.H).lambda_max;
  const double n_min = 8.0 * geom.beta / *r * std::sqrt(lam_hpmp) * std::sqrt(lam_minv_h);
  out.value = upper_display(*r, traces.tr_PHPSigmaS, geo, n, t);
  out.admissible = nd(n) >= n_min && t >= sched.burn_in() + 1;
  out.inputs.push_back({"r", *r});
  out.inputs.push_back({"n_threshold", n_min});
  out.inputs.push_back({"t0", td(sched.burn_in())});
  return out;
}

BoundReport pl_risk_bound(std::size_t n, double opt_gap, double mu, double beta, double tr_HinvSigma,
                          double lambda_max_HSigmaInv) {
  const double nn = nd(n);
  const double value = 2.0 * beta / mu * opt_gap + 2.0 * tr_HinvSigma / (mu * nn) +
                       64.0 * beta * tr_HinvSigma / (mu * mu * nn * nn);
  const double n_min = 32.0 * beta * lambda_max_HSigmaInv;
  return {"pl_risk_bound",
          value,
          {{"n", nn}, {"opt_gap", opt_gap}, {"mu", mu}, {"beta", beta}, {"tr_HinvSigma", tr_HinvSigma},
           {"n_threshold", n_min}},
          nn >= n_min};
}

BoundReport psgd_opt_rate(const ScheduleTrace& trace, double f0_gap, double mu, double beta,
                          const PreconditionerProfile& prof, double tr_PHPSigmaS) {
  const double value =
      std::exp(-prof.lambda_min_PH * mu * trace.T) * f0_gap + 0.5 * beta * tr_PHPSigmaS * trace.eta_bar;
  const double cap = 1.0 / (beta * prof.lambda_max_PH);
  return {"psgd_opt_rate",
          value,
          {{"t", td(trace.t)}, {"T", trace.T}, {"eta_bar", trace.eta_bar}, {"f0_gap", f0_gap}, {"mu", mu},
           {"step_cap", cap}},
          trace.max_eta <= cap * (1.0 + 1e-12)};
}

BoundReport minimax_lower(std::size_t n, double alpha, double tr_HinvSigma) {
  if (n < 1) throw ValidationError("minimax_lower: n must be >= 1");
  const double base = tr_HinvSigma / (nd(n) * alpha);
  return {"minimax_lower", 0.14 * base, {{"n", nd(n)}, {"alpha", alpha}, {"proof_constant_value", 4.0 / 27.0 * base}},
          true};
}

AssouadFamily assouad_family(const SymmetricPD& h, const Mat& sigma, double alpha, std::size_t n) {
  const int d = h.dim();
  if (d > 12) throw ValidationError("assouad_family: dimension above 12 is not enumerated");
  if (n < 1 || !(alpha > 0.0)) throw ValidationError("assouad_family: need n >= 1 and alpha > 0");
  const Mat h_inv_half = h.power_matrix(-0.5);
  const EigenDecomposition eig = sym_eig(symmetrize(h_inv_half * sigma * h_inv_half));
  AssouadFamily fam;
  fam.whitened_basis = eig.vectors;
  fam.delta = (4.0 / (3.0 * alpha * std::sqrt(nd(n)))) * eig.values.cwiseMax(0.0).cwiseSqrt();
  fam.directions = h_inv_half * eig.vectors;
  const Eigen::Index count = Eigen::Index{1} << d;
  fam.means.resize(d, count);
  for (Eigen::Index v = 0; v < count; ++v) {
    Vec bits(d);
    for (int j = 0; j < d; ++j) bits(j) = static_cast<double>((v >> j) & 1);
    fam.means.col(v) = fam.directions * fam.delta.cwiseProduct(bits);
  }
  // Adjacent members differ by delta_j q_j in the whitened space, where the
  // per-sample covariance is Sigma_bar / alpha^2 with Sigma_bar q_j = lambda_j q_j.
  double kl_max = 0.0;
  for (int j = 0; j < d; ++j) {
    if (!(eig.values(j) > 0.0)) continue;
    kl_max = std::max(kl_max, 0.5 * alpha * alpha * fam.delta(j) * fam.delta(j) / eig.values(j));
  }
  fam.tv_pinsker = std::sqrt(nd(n) * kl_max / 2.0);
  fam.tv_display = std::sqrt(nd(n) / 4.0 * 16.0 / (9.0 * alpha * nd(n)));
  fam.alpha_flag = std::abs(fam.tv_pinsker - fam.tv_display) > 1e-12;
  return fam;
}

BoundReport algo_lower(const PreconditionerProfile& prof, double tr_PHPSigma, std::uint64_t t) {
  if (t == 0) throw ValidationError("algo_lower: t must be >= 1");
  const double lmin = prof.lambda_min_PH;
  const double lmax = prof.lambda_max_PH;
  const double t0_statement = std::floor(2.0 * prof.kappa_PH);
  const double t0_proof = std::floor(4.0 * prof.kappa_PH);
  return {"algo_lower",
          tr_PHPSigma / (lmax * lmin * td(t)),
          {{"t", td(t)}, {"lambda_min_PH", lmin}, {"lambda_max_PH", lmax}, {"tr_PHPSigma", tr_PHPSigma},
           {"t0_statement", t0_statement}, {"t0_proof", t0_proof}},
          td(t) >= t0_proof};
}

ScheduleTrace algo_lower_schedule(double lambda_min_PH, double lambda_max_PH, double alpha, double beta) {
  return ScheduleTrace::capped_harmonic(1.0 / (beta * lambda_max_PH), 2.0 / (alpha * lambda_min_PH), 0.0);
}

BadPreconditioner badP_construction(const SymmetricPD& h, const Mat& sigma, double eps, bool statement_form) {
  const int d = h.dim();
  if (d < 2) throw ValidationError("badP_construction: need d >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("badP_construction: eps must lie in (0, 1)");
  const Mat& q = h.eigenvectors();
  const Vec& hv = h.eigenvalues();
  std::size_t k = 0;
  double best = kInf;
  for (int j = 0; j < d; ++j) {
    const double g = hv(j) * q.col(j).dot(sigma * q.col(j));
    if (g < best) {
      best = g;
      k = static_cast<std::size_t>(j);
    }
  }
  const double shrink = statement_form ? 1.0 - eps : 1.0 - eps / hv(static_cast<Eigen::Index>(k));
  Vec pv = Vec::Ones(d);
  pv(static_cast<Eigen::Index>(k)) = 1.0 - shrink;
  return {SymmetricPD::from_eigen(q, pv), k, best};
}

BoundReport badP_bound(const SymmetricPD& h, const Mat& sigma, double eps, std::uint64_t t) {
  if (t == 0) throw ValidationError("badP_bound: t must be >= 1");
  const double d = static_cast<double>(h.dim());
  const double tr_hs = trace_prod(h.matrix(), sigma);
  return {"badP_lower",
          (1.0 - 1.0 / d) * tr_hs / (eps * td(t)),
          {{"eps", eps}, {"t", td(t)}, {"tr_HSigma", tr_hs}, {"d", d}},
          td(t) > 4.0 / eps};
}

RankOneSigma anyP_construction(const SymmetricPD& p, const SymmetricPD& h, std::uint64_t t) {
  if (t == 0) throw ValidationError("anyP_construction: t must be >= 1");
  const PencilSpectrum pencil = pencil_spectrum(p, h);
  const Vec w = h.power_matrix(0.5) * pencil.vectors.col(0);
  RankOneSigma out;
  out.sigma = w * w.transpose();
  const Mat& pm = p.matrix();
  const double tr_hinv = trace_prod(h.power_matrix(-1.0), out.sigma);
  out.ratio = trace_prod(symmetrize(pm * h.matrix() * pm), out.sigma) / tr_hinv;
  out.lambda_max_sq = pencil.lambda_max * pencil.lambda_max;
  out.report = {"anyP_lower",
                pencil.kappa * tr_hinv / td(t),
                {{"t", td(t)}, {"kappa_PH", pencil.kappa}, {"tr_HinvSigma", tr_hinv}},
                td(t) > 4.0 * pencil.kappa};
  return out;
}

DecayCheck verify_decay_recursion(double a, double b, double big_b, double r0, std::uint64_t t_max) {
  if (!(a > 0.0 && a < b)) throw ValidationError("verify_decay_recursion: need 0 < a < b");
  const double upper_c = 2.0 * b / (std::exp(2.0) * a) * r0 + big_b / (a * a);
  const double lower_c = big_b / (2.0 * a * b);
  const std::uint64_t t0 = static_cast<std::uint64_t>(std::ceil(2.0 * b / a));
  const double alt_c = b / (std::exp(1.0) * a) * r0 + big_b / (a * a);
  DecayCheck out{true, true, 0.0, kInf, 0, 0.0, 0.0};
  double up = r0;
  double lo = r0;
  for (std::uint64_t t = 0; t < t_max; ++t) {
    const double eta = t == 0 ? 1.0 / (2.0 * b) : std::min(1.0 / (2.0 * b), 1.0 / (a * td(t)));
    up = (1.0 - 2.0 * a * eta) * up + eta * eta * big_b;
    lo = (1.0 - 2.0 * b * eta) * lo + eta * eta * big_b;
    const std::uint64_t next = t + 1;
    const double env_up = upper_c / td(next);
    const double ratio_up = env_up > 0.0 ? up / env_up : (up > 0.0 ? kInf : 0.0);
    out.worst_upper_ratio = std::max(out.worst_upper_ratio, ratio_up);
    if (next >= t0) out.worst_upper_ratio_after_t0 = std::max(out.worst_upper_ratio_after_t0, ratio_up);
    out.worst_upper_ratio_b_over_ea = std::max(out.worst_upper_ratio_b_over_ea, up * td(next) / alt_c);
    if (up > env_up * (1.0 + 1e-12) && out.upper_ok) {
      out.upper_ok = false;
      out.first_upper_violation = next;
    }
    if (next >= t0) {
      const double env_lo = lower_c / td(next);
      if (env_lo > 0.0) out.worst_lower_ratio = std::min(out.worst_lower_ratio, lo / env_lo);
      if (lo < env_lo * (1.0 - 1e-12)) out.lower_ok = false;
    }
  }
  return out;
}

double sigma_drift_bound(double lipschitz, double beta, double stability_core) {
  if (stability_core < 0.0) throw ValidationError("sigma_drift_bound: negative stability constant");
  return 16.0 * lipschitz * beta * std::sqrt(stability_core);
}

double grad_gen_bound(std::size_t n, double kappa, double tr_HinvSigma) {
  if (!(kappa >= 1.0) || n < 1) throw ValidationError("grad_gen_bound: need kappa >= 1 and n >= 1");
  return kappa * kappa * tr_HinvSigma / nd(n);
}

void write_bounds_csv(const std::string& path, const std::vector<BoundReport>& rows) {
  CsvWriter csv(path, {"name", "value", "admissible", "inputs"});
  for (const auto& r : rows) {
    std::string in;
    for (const auto& [k, v] : r.inputs) in += (in.empty() ? "" : ";") + k + "=" + fmt_num(v);
    csv.row({r.name, fmt_num(r.value), fmt_bool(r.admissible), in});
  }
}

}  // namespace psgdlab
