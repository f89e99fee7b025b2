#include "psgdlab/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "psgdlab/errors.hpp"

namespace psgdlab {

Dataset Dataset::replace_one(std::size_t i, Sample replacement) const {
  if (i >= samples.size()) throw ValidationError("replace_one: index out of range");
  Dataset out = *this;
  out.samples[i] = std::move(replacement);
  return out;
}

QuadraticNoisyModel::QuadraticNoisyModel(const SymmetricPD& h, Mat sigma, double alpha, Vec mu)
    : h_(h), sigma_(std::move(sigma)), alpha_(alpha), mu_(std::move(mu)) {
  if (!(alpha_ > 0.0)) throw ValidationError("quadratic model: alpha must be positive");
  if (sigma_.rows() != h_.dim() || !is_symmetric(sigma_) || mu_.size() != h_.dim())
    throw ValidationError("quadratic model: H, Sigma and mu must share one dimension");
  const EigenDecomposition eig = sym_eig(sigma_);
  if (eig.values.minCoeff() < -1e-12 * std::max(1.0, eig.values.maxCoeff()))
    throw ValidationError("quadratic model: Sigma must be positive semidefinite");
  const Vec root = eig.values.cwiseMax(0.0).cwiseSqrt();
  const Mat sigma_half = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
  h_inv_ = h_.power_matrix(-1.0);
  alpha_h_ = alpha_ * h_.matrix();
  noise_factor_ = h_inv_ * sigma_half / alpha_;
}

double QuadraticNoisyModel::loss(const Vec& x, const Sample& z) const {
  return 0.5 * alpha_ * weighted_norm_sq(x - z.z, h_.matrix());
}

void QuadraticNoisyModel::gradient(const Vec& x, const Sample& z, Vec& out) const {
  out.noalias() = alpha_h_ * x;
  out.noalias() -= alpha_h_ * z.z;
}

Mat QuadraticNoisyModel::hessian(const Vec&, const Sample&) const { return alpha_ * h_.matrix(); }

Sample QuadraticNoisyModel::draw(Rng& rng) const {
  return Sample{mu_ + noise_factor_ * standard_normal(rng, dim()), 0.0};
}

std::optional<double> QuadraticNoisyModel::population_excess_risk(const Vec& x) const {
  return 0.5 * alpha_ * weighted_norm_sq(x - mu_, h_.matrix());
}

std::optional<double> QuadraticNoisyModel::population_risk(const Vec& x) const {
  return *population_excess_risk(x) + noise_floor();
}

GeometrySpec QuadraticNoisyModel::geometry() const { return GeometrySpec::make(h_, alpha_, alpha_); }

double QuadraticNoisyModel::noise_floor() const { return trace_prod(h_inv_, sigma_) / (2.0 * alpha_); }

QuadraticNoisyModel make_quadratic(const SymmetricPD& h, const Mat& sigma, double alpha, const Vec& mu) {
  const double s = h.lambda_max();
  return QuadraticNoisyModel(h.scaled(1.0 / s), sigma, alpha * s, mu);
}

double population_excess_risk(const QuadraticNoisyModel& model, const Vec& x) {
  return *model.population_excess_risk(x);
}

double empirical_risk(const Dataset& data, const LossModel& model, const Vec& x) {
  if (data.samples.empty()) throw ValidationError("empirical_risk: empty dataset");
  double sum = 0.0;
  for (const Sample& s : data.samples) sum += model.loss(x, s);
  return sum / static_cast<double>(data.size());
}

namespace {

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }
double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

LogisticProblem::LogisticProblem(const SymmetricPD& feature_cov, double lambda_reg, Vec true_weights)
    : cov_(feature_cov),
      h_raw_(symmetrize(0.25 * feature_cov.matrix() +
                        lambda_reg * Mat::Identity(feature_cov.dim(), feature_cov.dim()))),
      cov_half_(feature_cov.power_matrix(0.5)),
      lambda_(lambda_reg),
      w_star_(std::move(true_weights)) {
  if (!(lambda_ > 0.0)) throw ValidationError("logistic: lambda must be positive");
  if (w_star_.size() != cov_.dim()) throw ValidationError("logistic: true_weights dimension mismatch");
}

double LogisticProblem::loss(const Vec& w, const Sample& z) const {
  return softplus(-z.y * z.z.dot(w)) + 0.5 * lambda_ * w.squaredNorm();
}

void LogisticProblem::gradient(const Vec& w, const Sample& z, Vec& out) const {
  const double m = z.y * z.z.dot(w);
  out.noalias() = (-z.y * sigmoid(-m)) * z.z + lambda_ * w;
}

Mat LogisticProblem::hessian(const Vec& w, const Sample& z) const {
  const double s = sigmoid(z.z.dot(w));
  return s * (1.0 - s) * z.z * z.z.transpose() + lambda_ * Mat::Identity(dim(), dim());
}

Sample LogisticProblem::draw(Rng& rng) const {
  Sample s;
  s.z = cov_half_ * standard_normal(rng, dim());
  const double p = sigmoid(s.z.dot(w_star_));
  s.y = uniform(rng, 0.0, 1.0) < p ? 1.0 : -1.0;
  return s;
}

GeometrySpec LogisticProblem::geometry() const {
  // Hess >= lambda I >= lambda / lambda_max(H_raw) * H_raw, and beta = 1
  // against H_raw; normalization gives alpha = lambda, beta = lambda_max(H_raw).
  return GeometrySpec::make(h_raw_, lambda_ / h_raw_.lambda_max(), 1.0);
}

double LogisticProblem::kappa_ell_bound() const { return 1.0 + cov_.lambda_max() / (4.0 * lambda_); }

Dataset draw_dataset(const LossModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("draw_dataset: n must be >= 1");
  Rng rng(seed);
  Dataset out;
  out.seed = seed;
  out.source = model.name();
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.samples.push_back(model.draw(rng));
  return out;
}

std::pair<LogisticProblem, Dataset> make_logistic(const SymmetricPD& feature_cov, double lambda_reg,
                                                  const Vec& true_weights, std::size_t n, std::uint64_t seed) {
  LogisticProblem problem(feature_cov, lambda_reg, true_weights);
  Dataset data = draw_dataset(problem, n, seed);
  return {std::move(problem), std::move(data)};
}

EffectiveDimensions effective_dimensions(const SymmetricPD& h, const Mat& sigma, const SymmetricPD& p,
                                         const SymmetricPD& m) {
  const int d = h.dim();
  if (p.dim() != d || m.dim() != d || sigma.rows() != d || sigma.cols() != d)
    throw ValidationError("effective_dimensions: dimension mismatch");
  const Mat& pm = p.matrix();
  EffectiveDimensions e{};
  e.tr_HinvSigma = trace_prod(frac_power(h, -1.0).matrix(), sigma);
  e.tr_PSigma = trace_prod(pm, sigma);
  e.tr_PHPSigma = trace_prod(symmetrize(pm * h.matrix() * pm), sigma);
  e.tr_PMPSigma = trace_prod(symmetrize(pm * m.matrix() * pm), sigma);
  e.tr_MinvSigma = trace_prod(frac_power(m, -1.0).matrix(), sigma);
  return e;
}

EmpiricalCovariance sigma_s_empirical(const QuadraticNoisyModel& model, const Dataset& data) {
  if (data.size() < 2) throw ValidationError("sigma_s_empirical: need at least two samples");
  const int d = model.dim();
  Vec mean = Vec::Zero(d);
  for (const Sample& s : data.samples) mean += s.z;
  mean /= static_cast<double>(data.size());
  Mat cov = Mat::Zero(d, d);
  for (const Sample& s : data.samples) {
    const Vec c = s.z - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(data.size());
  const double a = model.alpha();
  const Mat& h = model.H().matrix();
  Mat out = symmetrize(a * a * h * cov * h);
  const Vec spec = sym_eig(out).values;
  const bool pd = spec(0) > 0.0 && spec(spec.size() - 1) > 1e-12 * spec(0);
  return {std::move(out), pd};
}

Mat gradient_covariance(const LossModel& model, const Vec& x, std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw ValidationError("gradient_covariance: need at least two draws");
  Rng rng(seed);
  const int d = model.dim();
  Vec mean = Vec::Zero(d);
  Mat second = Mat::Zero(d, d);
  Vec g(d);
  for (std::size_t k = 0; k < draws; ++k) {
    model.gradient(x, model.draw(rng), g);
    mean += g;
    second.noalias() += g * g.transpose();
  }
  const double m = static_cast<double>(draws);
  mean /= m;
  return symmetrize((second - m * mean * mean.transpose()) / (m - 1.0));
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset file '" + path + "'");
  out.precision(17);
  for (const Sample& s : data.samples) {
    for (Eigen::Index j = 0; j < s.z.size(); ++j) out << s.z(j) << ',';
    out << s.y << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  const Mat m = read_matrix_csv(path);
  if (m.cols() < 2) throw ValidationError(path + ": dataset rows need at least one coordinate and a label");
  Dataset out;
  out.source = path;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.samples.push_back(Sample{m.row(i).head(m.cols() - 1).transpose(), m(i, m.cols() - 1)});
  return out;
}

}  // namespace psgdlab
