#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace psgdlab {

struct CommandOptions {
  std::string config;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::string out;                    // overrides the config output directory
  unsigned jobs = 1;
  std::string suite = "all";          // verify only
};

// Each command returns a process exit code: 0 ok, 1 failed verification.
// Config problems surface as ConfigError/ValidationError, numeric trouble as
// NumericError; the CLI maps those to 2 and 3.

// audit.csv: key,value
int cmd_audit(const CommandOptions& opt, std::ostream& log);

// run.csv. replicates == 1: t, x_0..x_{d-1}, eta, T, eta_bar, emp_risk,
// pop_excess, bound columns. replicates > 1: per-checkpoint mean and standard
// error instead of the iterate. Inadmissible bounds are left blank.
int cmd_run(const CommandOptions& opt, std::ostream& log);

// stability.csv, one row per (theta, n, t) for every aligned metric.
int cmd_stability(const CommandOptions& opt, std::ostream& log);

// lowerbounds.csv: kind, eps, t, bound, admissible, recursion_risk.
int cmd_lowerbounds(const CommandOptions& opt, std::ostream& log);

int cmd_verify(const CommandOptions& opt, std::ostream& log);

}  // namespace psgdlab
