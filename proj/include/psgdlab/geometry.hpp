#pragma once

#include <optional>

#include "psgdlab/linalg.hpp"
#include "psgdlab/random.hpp"

namespace psgdlab {

double rho_ell(double kappa_ell);

// Loss geometry. H is stored normalized to lambda_max(H) = 1; alpha and beta
// are rescaled by the same factor so that alpha H <= Hess <= beta H is
// unchanged. `scale` is the original lambda_max(H).
struct GeometrySpec {
  SymmetricPD H;
  double alpha;
  double beta;
  double kappa_ell;
  double rho_ell;  // +inf when kappa_ell == 1
  double scale;

  static GeometrySpec make(const SymmetricPD& h_raw, double alpha, double beta);
};

// (rho^2 - kappa^{1-theta}) / (rho^2 - 1), or 1 when rho is infinite.
// Empty when kappa^{1-theta} >= rho^2.
std::optional<double> alignment_constant(const GeometrySpec& geom, double kappa_ph, double theta);

struct Contraction {
  double rate;
  double eta_max;
};

// Preconditioner normalized to lambda_max(P) = 1, plus everything derived
// from the pencil (P, H).
struct PreconditionerProfile {
  SymmetricPD P;
  double scale;  // original lambda_max(P)
  PencilSpectrum pencil;
  double lambda_min_PH;
  double lambda_max_PH;
  double kappa_PH;
  std::optional<double> alignment;
  double rho_ell;
  double alpha;
  double beta;

  static PreconditionerProfile make(const SymmetricPD& p_raw, const GeometrySpec& geom);

  std::optional<double> alignment_at(double theta) const;
  std::optional<double> r(double theta) const;
  std::optional<double> eta_max(double theta) const;
};

std::optional<Contraction> contraction_rate(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                            double theta);

// H^{1/2} (H^{1/2} P H^{1/2})^{-theta} H^{1/2}; exactly H at theta = 0.
SymmetricPD m_theta(const SymmetricPD& p, const SymmetricPD& h, double theta);

// H^{(1-theta)/2} P^{-theta} H^{(1-theta)/2}. Agrees with m_theta only when
// P and H commute.
SymmetricPD m_theta_commuting(const SymmetricPD& p, const SymmetricPD& h, double theta);

struct InequalityCheck {
  double lhs;
  double rhs;
  bool holds;
};

struct ContractivityCheck {
  double ratio;
  double bound;
  bool holds;
};

// Quadratic test function f(x) = x^T A x / 2 with alpha H <= A <= beta H.
// lhs = <x - y, HP (grad f(x) - grad f(y))>. With transposed_form the lhs is
// <grad f(x) - grad f(y), HP (x - y)> instead; the two differ unless P and H
// commute, and only the first one is guaranteed.
InequalityCheck check_cocoercivity(const GeometrySpec& geom, const PreconditionerProfile& prof, const Mat& a,
                                   const Vec& x, const Vec& y, bool transposed_form = false);

ContractivityCheck check_contractivity(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                       const Mat& a, double theta, double eta, const Vec& x, const Vec& y);

InequalityCheck pl_growth_check(const GeometrySpec& geom, const PreconditionerProfile& prof, const Mat& a,
                                const Vec& x, const Vec& x_star);

// Throws ValidationError unless alpha H <= A <= beta H (pencil check, 1e-9 slack).
void require_sandwich(const GeometrySpec& geom, const Mat& a);

// A = H^{1/2} (alpha I + (beta - alpha) W) H^{1/2} with spec(W) in [0, 1].
Mat sample_sandwiched_hessian(Rng& rng, const GeometrySpec& geom);

SymmetricPD optimal_preconditioner(const SymmetricPD& h);
SymmetricPD diagonal_preconditioner(const SymmetricPD& h);
// P = H^{-1/2} Q diag(s) Q^T H^{-1/2}, s in [1/q, q] with both ends attained,
// so that H^{-1}/q <= P <= q H^{-1}.
SymmetricPD q_approx_preconditioner(Rng& rng, const SymmetricPD& h, double q);

// Gershgorin certificate for P = diag(H)^{-1}.
struct DiagonalDominance {
  double offdiag;      // max_i sum_{j != i} |A_ij|, A = D^{-1/2} H D^{-1/2}
  double kappa_bound;  // (1 + a) / (1 - a)
  std::optional<double> alignment_lower;
};

std::optional<DiagonalDominance> diagonal_dominance_bound(const GeometrySpec& geom);

}  // namespace psgdlab
