#include <gtest/gtest.h>

#include <string>

#include "psgdlab/config.hpp"

using namespace psgdlab;

namespace {

const char* kBase = R"({
  "problem": {
    "kind": "quadratic",
    "H": {"rows": [[1.0, 0.3], [0.3, 0.5]]},
    "Sigma": {"diag": [0.5, 0.2]},
    "alpha": 1.0,
    "mu": [1.0, -1.0]
  },
  "preconditioner": {"kind": "diagonal"},
  "schedule": {"kind": "proposition", "variant": "Pinv"},
  "n": 32,
  "t_max": 100,
  "seed": 7
})";

std::string with(const std::string& from, const std::string& to) {
  std::string s = kBase;
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

std::string where_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, ParsesBaseAndFillsDefaults) {
  const ExperimentConfig c = parse_config_text(kBase);
  EXPECT_EQ(c.problem_kind, "quadratic");
  EXPECT_EQ(c.H.rows(), 2);
  EXPECT_DOUBLE_EQ(c.H(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(c.Sigma(1, 1), 0.2);
  EXPECT_EQ(c.n, 32u);
  EXPECT_EQ(c.replicates, 1u);
  EXPECT_EQ(c.preconditioner.kind, PreconditionerKind::diagonal);
  EXPECT_EQ(c.schedule.variant, PropositionVariant::Pinv);
}

TEST(Config, UnknownFieldsNamedByPath) {
  EXPECT_EQ(where_of(with("\"seed\": 7", "\"seed\": 7, \"sede\": 1")), "sede");
  EXPECT_EQ(where_of(with("\"alpha\": 1.0", "\"alpha\": 1.0, \"beta\": 2")), "problem.beta");
  EXPECT_EQ(where_of(with("{\"kind\": \"diagonal\"}", "{\"kind\": \"diagonal\", \"q\": 2}")), "preconditioner.q");
}

TEST(Config, SyntaxErrorsCarryLineNumber) {
  EXPECT_EQ(where_of(with("\"n\": 32,", "\"n\": 32,,")), "line 11");
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_EQ(where_of(with("\"n\": 32", "\"n\": \"many\"")), "n");
  EXPECT_EQ(where_of(with("\"n\": 32", "\"n\": 0")), "n");
  EXPECT_EQ(where_of(with("\"alpha\": 1.0", "\"alpha\": -1.0")), "problem.alpha");
  EXPECT_EQ(where_of(with("\"mu\": [1.0, -1.0]", "\"mu\": [1.0]")), "problem.mu");
  EXPECT_EQ(where_of(with("[[1.0, 0.3], [0.3, 0.5]]", "[[1.0, 0.3], [0.2, 0.5]]")), "problem.H");
  EXPECT_EQ(where_of(with("\"Pinv\"", "\"Qinv\"")), "schedule.variant");
  EXPECT_EQ(where_of(with("\"seed\": 7", "\"seed\": 7, \"metrics\": [1.5]")), "metrics");
}

TEST(Config, MissingRequiredField) {
  std::string s = kBase;
  const std::string field = "\"Sigma\": {\"diag\": [0.5, 0.2]},";
  s.erase(s.find(field), field.size());
  EXPECT_EQ(where_of(s), "problem.Sigma");
}

TEST(Config, BuildsNormalizedExperiment) {
  const Experiment e = build_experiment(parse_config_text(kBase));
  EXPECT_NEAR(e.geom.H.lambda_max(), 1.0, 1e-14);
  EXPECT_NEAR(e.prof.P.lambda_max(), 1.0, 1e-14);
  ASSERT_NE(e.quadratic, nullptr);
  EXPECT_EQ(e.sigma_source, "population");
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/psgdlab.json"), ConfigError);
}
