#include "psgdlab/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psgdlab/bounds.hpp"
#include "psgdlab/random.hpp"

namespace psgdlab {

namespace {

using json = nlohmann::json;

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_.empty() ? "<root>" : path_, what); }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& get(const std::string& key) const {
    seen_.insert(key);
    if (!node_.contains(key)) throw ConfigError(sub(key), "required field is missing");
    return node_.at(key);
  }

  double number(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(sub(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_string()) throw ConfigError(sub(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) throw ConfigError(sub(key), "expected true or false");
    return v.get<bool>();
  }

  Reader object(const std::string& key) const { return Reader(get(key), sub(key)); }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown field");
  }

 private:
  const json& node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

Vec parse_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a nonempty array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + "[" + std::to_string(i) + "]", "expected a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Mat parse_matrix(const json& node, const std::string& where, const std::string& base_dir) {
  Reader r(node, where);
  Mat m;
  if (r.has("diag")) {
    m = parse_vector(r.get("diag"), r.sub("diag")).asDiagonal();
  } else if (r.has("rows")) {
    const json& rows = r.get("rows");
    if (!rows.is_array() || rows.empty()) throw ConfigError(r.sub("rows"), "expected an array of rows");
    const auto d = static_cast<Eigen::Index>(rows.size());
    m.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::string w = r.sub("rows") + "[" + std::to_string(i) + "]";
      const Vec row = parse_vector(rows[static_cast<std::size_t>(i)], w);
      if (row.size() != d) throw ConfigError(w, "matrix must be square");
      m.row(i) = row.transpose();
    }
  } else if (r.has("csv")) {
    std::filesystem::path p(r.text("csv"));
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    try {
      m = read_matrix_csv(p.string());
    } catch (const ValidationError& e) {
      throw ConfigError(r.sub("csv"), e.what());
    }
    if (m.rows() != m.cols()) throw ConfigError(r.sub("csv"), "matrix must be square");
  } else if (r.has("random_spd")) {
    Reader g = r.object("random_spd");
    const auto dim = static_cast<int>(g.count("dim"));
    const double kappa = g.number("kappa");
    Rng rng(g.count("seed", 0));
    g.finish();
    if (dim < 1 || !(kappa >= 1.0)) throw ConfigError(r.sub("random_spd"), "need dim >= 1 and kappa >= 1");
    m = random_spd(rng, dim, kappa).matrix();
  } else if (r.has("identity")) {
    m = Mat::Identity(static_cast<Eigen::Index>(r.count("identity")), static_cast<Eigen::Index>(r.count("identity")));
    if (m.rows() < 1) throw ConfigError(r.sub("identity"), "dimension must be >= 1");
  } else {
    r.fail("expected one of diag, rows, csv, random_spd, identity");
  }
  r.finish();
  if (!is_symmetric(m)) throw ConfigError(where, "matrix is not symmetric");
  return m;
}

PreconditionerConfig parse_preconditioner(const Reader& r) {
  PreconditionerConfig p;
  const std::string kind = r.text("kind");
  if (kind == "optimal") {
    p.kind = PreconditionerKind::optimal;
  } else if (kind == "identity") {
    p.kind = PreconditionerKind::identity;
  } else if (kind == "diagonal") {
    p.kind = PreconditionerKind::diagonal;
  } else if (kind == "q_approx") {
    p.kind = PreconditionerKind::q_approx;
    p.q = r.number("q");
    p.seed = r.count("seed", 0);
    if (!(p.q >= 1.0)) throw ConfigError(r.sub("q"), "q must be >= 1");
  } else if (kind == "bad_eps") {
    p.kind = PreconditionerKind::bad_eps;
    p.eps = r.number("eps");
    p.statement_form = r.flag("statement_form", false);
    if (!(p.eps > 0.0 && p.eps < 1.0)) throw ConfigError(r.sub("eps"), "eps must lie in (0, 1)");
  } else if (kind == "file") {
    p.kind = PreconditionerKind::file;
    p.path = r.text("path");
  } else {
    throw ConfigError(r.sub("kind"), "unknown preconditioner '" + kind + "'");
  }
  r.finish();
  return p;
}

ScheduleConfig parse_schedule(const Reader& r) {
  ScheduleConfig s;
  const std::string kind = r.text("kind");
  if (kind == "constant") {
    s.kind = ScheduleConfigKind::constant;
    s.eta = r.number("eta");
    s.r = r.number("r", 0.0);
    if (!(s.eta > 0.0)) throw ConfigError(r.sub("eta"), "must be positive");
  } else if (kind == "capped_harmonic") {
    s.kind = ScheduleConfigKind::capped_harmonic;
    s.eta0 = r.number("eta0");
    s.c = r.number("c");
    s.r = r.number("r", 0.0);
    if (!(s.eta0 > 0.0) || !(s.c > 0.0)) throw ConfigError(r.sub("kind"), "eta0 and c must be positive");
  } else if (kind == "proposition") {
    s.kind = ScheduleConfigKind::proposition;
    const std::string v = r.text("variant");
    if (v == "Pinv") {
      s.variant = PropositionVariant::Pinv;
    } else if (v == "Hgeom") {
      s.variant = PropositionVariant::Hgeom;
    } else if (v == "Mtheta") {
      s.variant = PropositionVariant::Mtheta;
      s.theta = r.number("theta");
      if (s.theta < 0.0 || s.theta > 1.0) throw ConfigError(r.sub("theta"), "must lie in [0, 1]");
    } else {
      throw ConfigError(r.sub("variant"), "expected Pinv, Hgeom or Mtheta");
    }
  } else {
    throw ConfigError(r.sub("kind"), "unknown schedule '" + kind + "'");
  }
  if (s.r < 0.0) throw ConfigError(r.sub("r"), "must be nonnegative");
  r.finish();
  return s;
}

template <class T>
std::vector<T> parse_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a nonempty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    if constexpr (std::is_floating_point_v<T>) {
      if (!v[i].is_number()) throw ConfigError(w, "expected a number");
    } else {
      if (!v[i].is_number_integer() || v[i].get<long long>() < 0) throw ConfigError(w, "expected a nonnegative integer");
    }
    out.push_back(v[i].get<T>());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError("line " + std::to_string(line), "JSON syntax error");
  }
  Reader top(root, "");
  ExperimentConfig cfg;

  Reader prob = top.object("problem");
  cfg.problem_kind = prob.text("kind");
  if (cfg.problem_kind == "quadratic") {
    cfg.H = parse_matrix(prob.get("H"), prob.sub("H"), base_dir);
    cfg.Sigma = parse_matrix(prob.get("Sigma"), prob.sub("Sigma"), base_dir);
    cfg.alpha = prob.number("alpha", 1.0);
    if (!(cfg.alpha > 0.0)) throw ConfigError(prob.sub("alpha"), "must be positive");
    cfg.mu = prob.has("mu") ? parse_vector(prob.get("mu"), prob.sub("mu")) : Vec::Zero(cfg.H.rows());
    if (cfg.Sigma.rows() != cfg.H.rows()) throw ConfigError(prob.sub("Sigma"), "dimension differs from H");
    if (cfg.mu.size() != cfg.H.rows()) throw ConfigError(prob.sub("mu"), "dimension differs from H");
  } else if (cfg.problem_kind == "logistic") {
    cfg.feature_cov = parse_matrix(prob.get("feature_cov"), prob.sub("feature_cov"), base_dir);
    cfg.lambda_reg = prob.number("lambda");
    if (!(cfg.lambda_reg > 0.0)) throw ConfigError(prob.sub("lambda"), "must be positive");
    cfg.true_weights = parse_vector(prob.get("true_weights"), prob.sub("true_weights"));
    if (cfg.true_weights.size() != cfg.feature_cov.rows())
      throw ConfigError(prob.sub("true_weights"), "dimension differs from feature_cov");
    cfg.sigma_draws = prob.count("sigma_draws", cfg.sigma_draws);
  } else {
    throw ConfigError(prob.sub("kind"), "expected quadratic or logistic");
  }
  prob.finish();
  const auto dim = cfg.problem_kind == "quadratic" ? cfg.H.rows() : cfg.feature_cov.rows();

  cfg.preconditioner = top.has("preconditioner") ? parse_preconditioner(top.object("preconditioner"))
                                                 : PreconditionerConfig{};
  if (cfg.preconditioner.kind == PreconditionerKind::file) {
    std::filesystem::path p(cfg.preconditioner.path);
    if (p.is_relative()) cfg.preconditioner.path = (std::filesystem::path(base_dir) / p).string();
  }
  cfg.schedule = top.has("schedule") ? parse_schedule(top.object("schedule")) : ScheduleConfig{};
  cfg.n = top.count("n", 1);
  if (cfg.n < 1) throw ConfigError("n", "must be >= 1");
  cfg.t_max = top.count("t_max", 0);
  cfg.replicates = top.count("replicates", 1);
  if (cfg.replicates < 1) throw ConfigError("replicates", "must be >= 1");
  cfg.seed = top.count("seed", 0);
  cfg.checkpoint_stride = top.count("checkpoint_stride", 0);
  if (top.has("metrics")) {
    cfg.metrics = parse_list<double>(top.get("metrics"), "metrics");
    for (double th : cfg.metrics)
      if (th < 0.0 || th > 1.0) throw ConfigError("metrics", "theta values must lie in [0, 1]");
  }
  if (top.has("x0")) {
    cfg.x0 = parse_vector(top.get("x0"), "x0");
    if (cfg.x0->size() != dim) throw ConfigError("x0", "dimension mismatch");
  }
  if (top.has("stability")) {
    Reader s = top.object("stability");
    for (auto v : parse_list<std::uint64_t>(s.get("n"), s.sub("n"))) cfg.stability.n.push_back(v);
    cfg.stability.t = parse_list<std::uint64_t>(s.get("t"), s.sub("t"));
    cfg.stability.holdout = s.count("holdout", cfg.stability.holdout);
    s.finish();
  }
  if (top.has("lowerbounds")) {
    Reader s = top.object("lowerbounds");
    if (s.has("t")) cfg.lowerbounds.t = parse_list<std::uint64_t>(s.get("t"), s.sub("t"));
    if (s.has("eps")) cfg.lowerbounds.eps = parse_list<double>(s.get("eps"), s.sub("eps"));
    s.finish();
  }
  cfg.outputs = top.text("outputs", ".");
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config_text(ss.str(), dir.empty() ? "." : dir.string());
}

namespace {

SymmetricPD to_spd(const Mat& m, const std::string& where) {
  try {
    return SymmetricPD(m);
  } catch (const ValidationError& e) {
    throw ConfigError(where, e.what());
  }
}

std::unique_ptr<LossModel> build_model(const ExperimentConfig& cfg) {
  if (cfg.problem_kind == "quadratic")
    return std::make_unique<QuadraticNoisyModel>(make_quadratic(to_spd(cfg.H, "problem.H"), cfg.Sigma, cfg.alpha, cfg.mu));
  return std::make_unique<LogisticProblem>(to_spd(cfg.feature_cov, "problem.feature_cov"), cfg.lambda_reg,
                                           cfg.true_weights);
}

SymmetricPD build_preconditioner(const PreconditionerConfig& pc, const GeometrySpec& geom, const Mat& sigma) {
  switch (pc.kind) {
    case PreconditionerKind::optimal:
      return optimal_preconditioner(geom.H);
    case PreconditionerKind::identity:
      return SymmetricPD::identity(geom.H.dim());
    case PreconditionerKind::diagonal:
      return diagonal_preconditioner(geom.H);
    case PreconditionerKind::q_approx: {
      Rng rng(pc.seed);
      return q_approx_preconditioner(rng, geom.H, pc.q);
    }
    case PreconditionerKind::bad_eps:
      return badP_construction(geom.H, sigma, pc.eps, pc.statement_form).P;
    case PreconditionerKind::file: {
      Mat m;
      try {
        m = read_matrix_csv(pc.path);
      } catch (const ValidationError& e) {
        throw ConfigError("preconditioner.path", e.what());
      }
      return to_spd(m, "preconditioner.path");
    }
  }
  throw ConfigError("preconditioner.kind", "unhandled kind");
}

}  // namespace

ScheduleTrace Experiment::schedule() const {
  const ScheduleConfig& s = cfg.schedule;
  const double r_default = *prof.r(1.0);
  switch (s.kind) {
    case ScheduleConfigKind::constant:
      return ScheduleTrace::constant(s.eta, s.r > 0.0 ? s.r : r_default);
    case ScheduleConfigKind::capped_harmonic:
      return ScheduleTrace::capped_harmonic(s.eta0, s.c, s.r > 0.0 ? s.r : r_default);
    case ScheduleConfigKind::proposition:
      try {
        return proposition_schedule(prof, geom, s.variant, s.theta);
      } catch (const ConfigError&) {
        throw;
      } catch (const ValidationError& e) {
        throw ConfigError("schedule.variant", e.what());
      }
  }
  throw ConfigError("schedule.kind", "unhandled kind");
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  std::unique_ptr<LossModel> model = build_model(cfg);
  GeometrySpec geom = model->geometry();
  const auto* quad = dynamic_cast<const QuadraticNoisyModel*>(model.get());
  Mat sigma;
  std::string source;
  if (quad) {
    sigma = quad->Sigma();
    source = "population";
  } else {
    const auto* logi = static_cast<const LogisticProblem*>(model.get());
    sigma = gradient_covariance(*logi, logi->true_weights(), cfg.sigma_draws, derive_seed(cfg.seed, 0xC0FFEE));
    source = "estimated_at_true_weights";
  }
  SymmetricPD p = build_preconditioner(cfg.preconditioner, geom, sigma);
  if (p.dim() != geom.H.dim()) throw ConfigError("preconditioner", "dimension differs from the problem");
  PreconditionerProfile prof = PreconditionerProfile::make(p, geom);
  return Experiment{cfg, std::move(model), quad, std::move(geom), std::move(prof), std::move(sigma), source};
}

}  // namespace psgdlab
