#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psgdlab/geometry.hpp"
#include "psgdlab/linalg.hpp"
#include "psgdlab/random.hpp"

namespace psgdlab {

// One example. `z` is the data point (quadratic) or the feature vector
// (logistic); `y` is the label in {-1, +1} and unused by the quadratic model.
struct Sample {
  Vec z;
  double y = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;
  std::string source;

  std::size_t size() const { return samples.size(); }
  Dataset replace_one(std::size_t i, Sample replacement) const;
};

class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual double loss(const Vec& x, const Sample& z) const = 0;
  virtual void gradient(const Vec& x, const Sample& z, Vec& out) const = 0;
  virtual Mat hessian(const Vec& x, const Sample& z) const = 0;
  virtual Sample draw(Rng& rng) const = 0;
  // f(x) - inf f when available in closed form.
  virtual std::optional<double> population_excess_risk(const Vec&) const { return std::nullopt; }
  // f(x) itself when available in closed form.
  virtual std::optional<double> population_risk(const Vec&) const { return std::nullopt; }
  // Geometry (H, alpha, beta) the model certifies.
  virtual GeometrySpec geometry() const = 0;

  Vec gradient(const Vec& x, const Sample& z) const {
    Vec g(dim());
    gradient(x, z, g);
    return g;
  }
};

// l(x, z) = alpha/2 ||x - z||_H^2 with z ~ N(mu, H^{-1} Sigma H^{-1} / alpha^2),
// so the gradient noise has covariance exactly Sigma.
class QuadraticNoisyModel final : public LossModel {
 public:
  QuadraticNoisyModel(const SymmetricPD& h, Mat sigma, double alpha, Vec mu);

  int dim() const override { return h_.dim(); }
  using LossModel::gradient;
  std::string name() const override { return "quadratic"; }
  double loss(const Vec& x, const Sample& z) const override;
  void gradient(const Vec& x, const Sample& z, Vec& out) const override;
  Mat hessian(const Vec& x, const Sample& z) const override;
  Sample draw(Rng& rng) const override;
  std::optional<double> population_excess_risk(const Vec& x) const override;
  std::optional<double> population_risk(const Vec& x) const override;
  GeometrySpec geometry() const override;

  const SymmetricPD& H() const { return h_; }
  const Mat& Sigma() const { return sigma_; }
  const Mat& H_inv() const { return h_inv_; }
  double alpha() const { return alpha_; }
  const Vec& mu() const { return mu_; }
  // tr(H^{-1} Sigma) / (2 alpha), the irreducible part of f.
  double noise_floor() const;

 private:
  SymmetricPD h_;
  Mat sigma_;
  Mat h_inv_;
  Mat alpha_h_;
  Mat noise_factor_;
  double alpha_;
  Vec mu_;
};

// Normalizes H to lambda_max = 1 and rescales alpha so that the loss and the
// sampling law are unchanged. Sigma must be symmetric PSD.
QuadraticNoisyModel make_quadratic(const SymmetricPD& h, const Mat& sigma, double alpha, const Vec& mu);

double population_excess_risk(const QuadraticNoisyModel& model, const Vec& x);

double empirical_risk(const Dataset& data, const LossModel& model, const Vec& x);

// l(w, (a, y)) = log(1 + exp(-y a^T w)) + lambda/2 ||w||^2, a ~ N(0, C).
class LogisticProblem final : public LossModel {
 public:
  LogisticProblem(const SymmetricPD& feature_cov, double lambda_reg, Vec true_weights);

  int dim() const override { return cov_.dim(); }
  using LossModel::gradient;
  std::string name() const override { return "logistic"; }
  double loss(const Vec& w, const Sample& z) const override;
  void gradient(const Vec& w, const Sample& z, Vec& out) const override;
  Mat hessian(const Vec& w, const Sample& z) const override;
  Sample draw(Rng& rng) const override;
  GeometrySpec geometry() const override;

  const SymmetricPD& feature_cov() const { return cov_; }
  double lambda_reg() const { return lambda_; }
  const Vec& true_weights() const { return w_star_; }
  // C/4 + lambda I before normalization.
  const SymmetricPD& H_raw() const { return h_raw_; }
  // 1 + lambda_max(C) / (4 lambda).
  double kappa_ell_bound() const;

 private:
  SymmetricPD cov_;
  SymmetricPD h_raw_;
  Mat cov_half_;
  double lambda_;
  Vec w_star_;
};

Dataset draw_dataset(const LossModel& model, std::size_t n, std::uint64_t seed);

std::pair<LogisticProblem, Dataset> make_logistic(const SymmetricPD& feature_cov, double lambda_reg,
                                                  const Vec& true_weights, std::size_t n, std::uint64_t seed);

struct EffectiveDimensions {
  double tr_HinvSigma;
  double tr_PSigma;
  double tr_PHPSigma;
  double tr_PMPSigma;
  double tr_MinvSigma;
};

EffectiveDimensions effective_dimensions(const SymmetricPD& h, const Mat& sigma, const SymmetricPD& p,
                                         const SymmetricPD& m);

struct EmpiricalCovariance {
  Mat matrix;
  bool positive_definite;
};

// alpha^2 H Cov_S(z) H with the 1/n normalizer: the covariance of the
// stochastic gradient under uniform sampling from S (x-free for this model).
EmpiricalCovariance sigma_s_empirical(const QuadraticNoisyModel& model, const Dataset& data);

// Monte-Carlo Cov(grad l(x, z)) at a fixed x. Diagnostic for models without a
// closed-form noise covariance.
Mat gradient_covariance(const LossModel& model, const Vec& x, std::size_t draws, std::uint64_t seed);

// One sample per row: z coordinates, then y.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

}  // namespace psgdlab
