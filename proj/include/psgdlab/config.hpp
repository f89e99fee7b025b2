#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psgdlab/errors.hpp"
#include "psgdlab/geometry.hpp"
#include "psgdlab/problems.hpp"
#include "psgdlab/psgd.hpp"

namespace psgdlab {

// Malformed or inconsistent configuration. `where` is a line number or a
// dotted field path.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : ValidationError(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

enum class PreconditionerKind { optimal, identity, diagonal, q_approx, bad_eps, file };

struct PreconditionerConfig {
  PreconditionerKind kind = PreconditionerKind::optimal;
  double q = 1.0;
  double eps = 0.5;
  bool statement_form = false;
  std::uint64_t seed = 0;
  std::string path;
};

enum class ScheduleConfigKind { constant, capped_harmonic, proposition };

struct ScheduleConfig {
  ScheduleConfigKind kind = ScheduleConfigKind::proposition;
  double eta = 0.0;
  double eta0 = 0.0;
  double c = 0.0;
  double r = 0.0;
  PropositionVariant variant = PropositionVariant::Pinv;
  double theta = 0.0;
};

struct StabilityGrid {
  std::vector<std::size_t> n;
  std::vector<std::uint64_t> t;
  std::size_t holdout = 2000;
};

struct LowerBoundGrid {
  std::vector<std::uint64_t> t;
  std::vector<double> eps;
};

struct ExperimentConfig {
  std::string problem_kind;  // "quadratic" or "logistic"
  Mat H;                     // quadratic
  Mat Sigma;                 // quadratic
  double alpha = 1.0;
  Vec mu;
  Mat feature_cov;           // logistic
  double lambda_reg = 0.0;
  Vec true_weights;
  std::size_t sigma_draws = 20000;  // logistic noise-covariance estimate

  PreconditionerConfig preconditioner;
  ScheduleConfig schedule;
  std::size_t n = 1;
  std::uint64_t t_max = 0;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_stride = 0;
  std::vector<double> metrics{0.0};
  std::optional<Vec> x0;
  StabilityGrid stability;
  LowerBoundGrid lowerbounds;
  std::string outputs = ".";
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// Objects materialized from a config.
struct Experiment {
  ExperimentConfig cfg;
  std::unique_ptr<LossModel> model;
  const QuadraticNoisyModel* quadratic = nullptr;  // set when problem is quadratic
  GeometrySpec geom;
  PreconditionerProfile prof;
  Mat sigma;  // gradient-noise covariance used by the bounds
  std::string sigma_source;

  ScheduleTrace schedule() const;
};

Experiment build_experiment(const ExperimentConfig& cfg);

}  // namespace psgdlab
