#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "psgdlab/geometry.hpp"
#include "psgdlab/problems.hpp"
#include "psgdlab/psgd.hpp"

namespace psgdlab {

// Second moment E[(x_t - mu)(x_t - mu)^T] of single-pass PSGD on the
// quadratic model.
struct MomentState {
  Mat M;
  std::uint64_t t = 0;
};

using StepRule = std::function<double(std::uint64_t)>;  // eta for step index s = 0, 1, ...

// Exact expected excess risk (alpha/2) tr(H M_t) for t = 0..t_max, from
// M_{t+1} = A M_t A^T + eta_t^2 P Sigma P, A = I - eta_t alpha P H.
// Sigma may be singular.
std::vector<double> exact_risk_recursion(const Mat& h, const Mat& sigma, double alpha, const Mat& p,
                                         const StepRule& step, std::uint64_t t_max, const Vec& x0_minus_mu);

std::vector<double> exact_risk_recursion(const QuadraticNoisyModel& model, const Mat& p, ScheduleTrace schedule,
                                         std::uint64_t t_max, const Vec& x0);

void advance_moment(MomentState& state, const Mat& h, const Mat& sigma, double alpha, const Mat& p, double eta);

struct BoundReport {
  std::string name;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> inputs;
  bool admissible = false;

  double input(const std::string& key) const;
};

// Bounds along a trajectory refer to "t sufficiently large"; this is taken
// as t >= t0 + 1 of the matching proposition schedule.
BoundReport upper_bound_pinv(std::size_t n, std::uint64_t t, const GeometrySpec& geom,
                             const PreconditionerProfile& prof, double tr_PHPSigmaS, double tr_PSigma);

BoundReport upper_bound_hgeom(std::size_t n, std::uint64_t t, const GeometrySpec& geom,
                              const PreconditionerProfile& prof, double tr_PHPSigmaS, double tr_HinvSigma,
                              double tr_PHPSigma);

struct MthetaTraces {
  double tr_PHPSigmaS;
  double tr_MinvSigma;
  double tr_PMPSigma;
};

BoundReport upper_bound_mtheta(std::size_t n, std::uint64_t t, double theta, const GeometrySpec& geom,
                               const PreconditionerProfile& prof, const MthetaTraces& traces);

BoundReport pl_risk_bound(std::size_t n, double opt_gap, double mu, double beta, double tr_HinvSigma,
                          double lambda_max_HSigmaInv);

BoundReport psgd_opt_rate(const ScheduleTrace& trace, double f0_gap, double mu, double beta,
                          const PreconditionerProfile& prof, double tr_PHPSigmaS);

// 0.14 tr(H^{-1} Sigma) / (n alpha); the proof's 4/27 is echoed in inputs.
BoundReport minimax_lower(std::size_t n, double alpha, double tr_HinvSigma);

struct AssouadFamily {
  Mat means;       // column v holds mu_v, v read as a bit vector
  Vec delta;       // per-coordinate gaps in the whitened space
  Mat directions;  // column j: H^{-1/2} q_j
  Mat whitened_basis;  // Q, eigenvectors of H^{-1/2} Sigma H^{-1/2}
  double tv_pinsker;   // sqrt(n KL / 2) for adjacent v, from the Gaussian KL
  double tv_display;   // sqrt((n/4) (16 / (9 alpha n))), the closed form as printed
  bool alpha_flag;     // the two disagree (alpha != 1)
};

AssouadFamily assouad_family(const SymmetricPD& h, const Mat& sigma, double alpha, std::size_t n);

// tr(PHP Sigma) / (lambda_max lambda_min t). Gated on t >= floor(4 kappa);
// floor(2 kappa) is echoed as t0_statement.
BoundReport algo_lower(const PreconditionerProfile& prof, double tr_PHPSigma, std::uint64_t t);

// eta_s = min(1 / (beta lambda_max), 2 / (alpha lambda_min s)) for s = 1, 2, ...
// With alpha = beta = 1 this is the single-pass lemma's schedule.
ScheduleTrace algo_lower_schedule(double lambda_min_PH, double lambda_max_PH, double alpha = 1.0,
                                  double beta = 1.0);

struct BadPreconditioner {
  SymmetricPD P;
  std::size_t k;
  double gamma_k;  // h_k q_k^T Sigma q_k
};

// P_eps = I - (1 - eps / h_k) q_k q_k^T, k = argmin_j h_j q_j^T Sigma q_j.
// statement_form switches to I - (1 - eps) q_k q_k^T.
BadPreconditioner badP_construction(const SymmetricPD& h, const Mat& sigma, double eps, bool statement_form = false);

// (1 - 1/d) tr(H Sigma) / (eps t), admissible for t > 4 / eps.
BoundReport badP_bound(const SymmetricPD& h, const Mat& sigma, double eps, std::uint64_t t);

struct RankOneSigma {
  Mat sigma;     // H^{1/2} u u^T H^{1/2}, u top eigenvector of H^{1/2} P H^{1/2}
  double ratio;  // tr(PHP Sigma) / tr(H^{-1} Sigma)
  double lambda_max_sq;
  BoundReport report;  // kappa(PH) tr(H^{-1} Sigma) / t, admissible for t > 4 kappa
};

RankOneSigma anyP_construction(const SymmetricPD& p, const SymmetricPD& h, std::uint64_t t);

struct DecayCheck {
  bool upper_ok;
  bool lower_ok;
  double worst_upper_ratio;  // max_t r_t / envelope
  double worst_lower_ratio;  // min_t r_t / envelope
  std::uint64_t first_upper_violation;  // 0 when none
  double worst_upper_ratio_after_t0;    // same envelope, t >= t0 only
  double worst_upper_ratio_b_over_ea;   // envelope with b/(e a) in place of 2b/(e^2 a)
};

// Iterates both recurrences of the decaying step-size lemma with equality and
// eta_t = min(1/(2b), 1/(a t)), checking the upper envelope for t >= 1 and
// the lower one from ceil(2b/a).
DecayCheck verify_decay_recursion(double a, double b, double big_b, double r0, std::uint64_t t_max);

// 16 L beta sqrt(core), core = (eta_bar/(8n) + (1 - e^{-T r/4})/(n^2 r^2)) tr(PMP Sigma).
double sigma_drift_bound(double lipschitz, double beta, double stability_core);

double grad_gen_bound(std::size_t n, double kappa, double tr_HinvSigma);

void write_bounds_csv(const std::string& path, const std::vector<BoundReport>& rows);

}  // namespace psgdlab
