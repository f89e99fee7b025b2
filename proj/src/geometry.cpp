#include "psgdlab/geometry.hpp"

#include <cmath>
#include <limits>

#include "psgdlab/errors.hpp"

namespace psgdlab {

namespace {

constexpr double kSlack = 1e-10;

bool within(double lhs, double rhs) { return lhs >= rhs - kSlack * (1.0 + std::abs(rhs)); }

void require_dim(const GeometrySpec& geom, const Vec& v, const char* what) {
  if (v.size() != geom.H.dim()) throw ValidationError(std::string(what) + ": dimension mismatch");
}

}  // namespace

double rho_ell(double kappa_ell) {
  if (!(kappa_ell >= 1.0)) throw ValidationError("rho_ell: kappa_ell must be >= 1");
  if (kappa_ell == 1.0) return std::numeric_limits<double>::infinity();
  const double s = std::sqrt(kappa_ell);
  return (s + 1.0) / (s - 1.0);
}

GeometrySpec GeometrySpec::make(const SymmetricPD& h_raw, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta >= alpha))
    throw ValidationError("geometry: need 0 < alpha <= beta");
  const double s = h_raw.lambda_max();
  const double kappa = beta / alpha;
  return GeometrySpec{h_raw.scaled(1.0 / s), alpha * s, beta * s, kappa, psgdlab::rho_ell(kappa), s};
}

namespace {

std::optional<double> alignment_from_rho(double rho, double kappa_ph, double theta) {
  if (!(kappa_ph >= 1.0 - 1e-12)) throw ValidationError("alignment_constant: kappa(PH) must be >= 1");
  if (theta < 0.0 || theta > 1.0) throw ValidationError("alignment_constant: theta outside [0, 1]");
  if (std::isinf(rho)) return 1.0;
  const double rho2 = rho * rho;
  const double k = std::pow(std::max(kappa_ph, 1.0), 1.0 - theta);
  if (k >= rho2) return std::nullopt;
  return (rho2 - k) / (rho2 - 1.0);
}

}  // namespace

std::optional<double> alignment_constant(const GeometrySpec& geom, double kappa_ph, double theta) {
  return alignment_from_rho(geom.rho_ell, kappa_ph, theta);
}

PreconditionerProfile PreconditionerProfile::make(const SymmetricPD& p_raw, const GeometrySpec& geom) {
  if (p_raw.dim() != geom.H.dim()) throw ValidationError("preconditioner: dimension mismatch with H");
  const double s = p_raw.lambda_max();
  SymmetricPD p = p_raw.scaled(1.0 / s);
  PencilSpectrum pencil = pencil_spectrum(p, geom.H);
  const double lmin = pencil.lambda_min;
  const double lmax = pencil.lambda_max;
  const double kappa = pencil.kappa;
  auto c = alignment_constant(geom, kappa, 0.0);
  return PreconditionerProfile{std::move(p), s,    std::move(pencil), lmin,      lmax,
                               kappa,        c,    geom.rho_ell,      geom.alpha, geom.beta};
}

std::optional<double> PreconditionerProfile::alignment_at(double theta) const {
  return alignment_from_rho(rho_ell, kappa_PH, theta);
}

std::optional<double> PreconditionerProfile::r(double theta) const {
  auto c = alignment_at(theta);
  if (!c) return std::nullopt;
  return 2.0 * lambda_min_PH * *c * alpha * beta / (alpha + beta);
}

std::optional<double> PreconditionerProfile::eta_max(double theta) const {
  auto c = alignment_at(theta);
  if (!c) return std::nullopt;
  return 2.0 * *c / (lambda_max_PH * std::pow(kappa_PH, 1.0 - theta) * (alpha + beta));
}

std::optional<Contraction> contraction_rate(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                            double theta) {
  if (prof.P.dim() != geom.H.dim()) throw ValidationError("contraction_rate: dimension mismatch");
  auto r = prof.r(theta);
  if (!r) return std::nullopt;
  return Contraction{*r, *prof.eta_max(theta)};
}

SymmetricPD m_theta(const SymmetricPD& p, const SymmetricPD& h, double theta) {
  if (theta < 0.0 || theta > 1.0) throw ValidationError("m_theta: theta outside [0, 1]");
  if (p.dim() != h.dim()) throw ValidationError("m_theta: dimension mismatch");
  if (theta == 0.0) return h;
  const Mat h_half = h.power_matrix(0.5);
  const SymmetricPD s(symmetrize(h_half * p.matrix() * h_half));
  return SymmetricPD(symmetrize(h_half * s.power_matrix(-theta) * h_half));
}

SymmetricPD m_theta_commuting(const SymmetricPD& p, const SymmetricPD& h, double theta) {
  if (theta < 0.0 || theta > 1.0) throw ValidationError("m_theta_commuting: theta outside [0, 1]");
  const Mat hp = h.power_matrix(0.5 * (1.0 - theta));
  return SymmetricPD(symmetrize(hp * p.power_matrix(-theta) * hp));
}

void require_sandwich(const GeometrySpec& geom, const Mat& a) {
  if (a.rows() != geom.H.dim() || !is_symmetric(a))
    throw ValidationError("test Hessian must be symmetric with the dimension of H");
  const Mat h_inv_half = geom.H.power_matrix(-0.5);
  const Vec spec = sym_eig(symmetrize(h_inv_half * a * h_inv_half)).values;
  const double lo = spec(spec.size() - 1);
  const double hi = spec(0);
  if (lo < geom.alpha * (1.0 - 1e-9) || hi > geom.beta * (1.0 + 1e-9))
    throw ValidationError("test Hessian violates alpha H <= A <= beta H");
}

InequalityCheck check_cocoercivity(const GeometrySpec& geom, const PreconditionerProfile& prof, const Mat& a,
                                   const Vec& x, const Vec& y, bool transposed_form) {
  require_dim(geom, x, "check_cocoercivity");
  require_dim(geom, y, "check_cocoercivity");
  if (!prof.alignment) throw ValidationError("check_cocoercivity: preconditioner is not spectrally aligned");
  require_sandwich(geom, a);
  const Mat& h = geom.H.matrix();
  const Vec u = x - y;
  const Vec v = a * u;
  const double lhs = transposed_form ? v.dot(h * (prof.P.matrix() * u)) : u.dot(h * (prof.P.matrix() * v));
  const double coeff = prof.lambda_min_PH * *prof.alignment / (geom.alpha + geom.beta);
  const double rhs =
      coeff * (geom.alpha * geom.beta * weighted_norm_sq(u, h) + weighted_norm_sq(v, geom.H.power_matrix(-1.0)));
  return {lhs, rhs, within(lhs, rhs)};
}

ContractivityCheck check_contractivity(const GeometrySpec& geom, const PreconditionerProfile& prof,
                                       const Mat& a, double theta, double eta, const Vec& x, const Vec& y) {
  require_dim(geom, x, "check_contractivity");
  require_dim(geom, y, "check_contractivity");
  auto c = contraction_rate(geom, prof, theta);
  if (!c) throw ValidationError("check_contractivity: no alignment at this theta");
  if (eta < 0.0 || eta > c->eta_max * (1.0 + 1e-12))
    throw ValidationError("check_contractivity: step size exceeds eta_max");
  const Vec u = x - y;
  if (u.squaredNorm() == 0.0) throw ValidationError("check_contractivity: x and y coincide");
  require_sandwich(geom, a);
  const Mat m = m_theta(prof.P, geom.H, theta).matrix();
  const Vec next = u - eta * (prof.P.matrix() * (a * u));
  const double ratio = weighted_norm_sq(next, m) / weighted_norm_sq(u, m);
  const double bound = 1.0 - eta * c->rate;
  return {ratio, bound, ratio <= bound + kSlack * (1.0 + std::abs(bound))};
}

InequalityCheck pl_growth_check(const GeometrySpec& geom, const PreconditionerProfile& prof, const Mat& a,
                                const Vec& x, const Vec& x_star) {
  require_dim(geom, x, "pl_growth_check");
  require_dim(geom, x_star, "pl_growth_check");
  if (!prof.alignment) throw ValidationError("pl_growth_check: preconditioner is not spectrally aligned");
  require_sandwich(geom, a);
  const Mat& h = geom.H.matrix();
  const Vec u = x - x_star;
  const double lhs = u.dot(h * (prof.P.matrix() * (a * u)));
  const double gap = 0.5 * u.dot(a * u);
  const double rhs = 2.0 * geom.alpha / (geom.alpha + geom.beta) * prof.lambda_min_PH * *prof.alignment *
                     (gap + 0.5 * geom.beta * weighted_norm_sq(u, h));
  return {lhs, rhs, within(lhs, rhs)};
}

Mat sample_sandwiched_hessian(Rng& rng, const GeometrySpec& geom) {
  const int d = geom.H.dim();
  const Mat w = random_contraction(rng, d);
  const Mat h_half = geom.H.power_matrix(0.5);
  const Mat inner = geom.alpha * Mat::Identity(d, d) + (geom.beta - geom.alpha) * w;
  return symmetrize(h_half * inner * h_half);
}

SymmetricPD optimal_preconditioner(const SymmetricPD& h) {
  return SymmetricPD::from_eigen(h.eigenvectors(), h.lambda_min() * h.eigenvalues().cwiseInverse());
}

SymmetricPD diagonal_preconditioner(const SymmetricPD& h) {
  return SymmetricPD::diagonal(h.matrix().diagonal().cwiseInverse());
}

SymmetricPD q_approx_preconditioner(Rng& rng, const SymmetricPD& h, double q) {
  if (!(q >= 1.0)) throw ValidationError("q_approx_preconditioner: q must be >= 1");
  const int d = h.dim();
  Vec s(d);
  for (int i = 0; i < d; ++i) s(i) = std::exp(uniform(rng, -std::log(q), std::log(q)));
  s(0) = q;
  if (d > 1) s(d - 1) = 1.0 / q;
  const Mat q_basis = random_orthogonal(rng, d);
  const Mat h_inv_half = h.power_matrix(-0.5);
  return SymmetricPD(symmetrize(h_inv_half * q_basis * s.asDiagonal() * q_basis.transpose() * h_inv_half));
}

std::optional<DiagonalDominance> diagonal_dominance_bound(const GeometrySpec& geom) {
  const Mat& h = geom.H.matrix();
  const Vec d_inv_half = h.diagonal().cwiseSqrt().cwiseInverse();
  const Mat a = d_inv_half.asDiagonal() * h * d_inv_half.asDiagonal();
  double off = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) off = std::max(off, a.row(i).cwiseAbs().sum() - std::abs(a(i, i)));
  if (off >= 1.0) return std::nullopt;
  const double kb = (1.0 + off) / (1.0 - off);
  return DiagonalDominance{off, kb, alignment_constant(geom, kb, 0.0)};
}

}  // namespace psgdlab
