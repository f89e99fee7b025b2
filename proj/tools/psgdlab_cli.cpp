#include <iostream>

#include "CLI11.hpp"
#include "psgdlab/commands.hpp"
#include "psgdlab/config.hpp"
#include "psgdlab/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void add_common(CLI::App* sub, psgdlab::CommandOptions& opt, bool needs_config) {
  auto* c = sub->add_option("--config", opt.config, "experiment config (JSON)");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", opt.seed, "override the master seed");
  sub->add_option("--out", opt.out, "output directory (default: config 'outputs')");
  sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psgdlab: preconditioned SGD geometry, stability and bounds"};
  app.require_subcommand(1);
  psgdlab::CommandOptions opt;

  auto* audit = app.add_subcommand("audit", "geometry report for a config");
  auto* run = app.add_subcommand("run", "multipass PSGD trajectories with risk and bound columns");
  auto* stab = app.add_subcommand("stability", "parameter-stability grid over (n, t)");
  auto* lower = app.add_subcommand("lowerbounds", "lower-bound constructions vs exact recursion");
  auto* verify = app.add_subcommand("verify", "property and oracle checks");
  for (auto* s : {audit, run, stab, lower}) add_common(s, opt, true);
  add_common(verify, opt, false);
  verify->add_option("suite", opt.suite, "geometry | schedules | oracles | bounds | all")
      ->check(CLI::IsMember({"geometry", "schedules", "oracles", "bounds", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*audit) return psgdlab::cmd_audit(opt, std::cout);
    if (*run) return psgdlab::cmd_run(opt, std::cout);
    if (*stab) return psgdlab::cmd_stability(opt, std::cout);
    if (*lower) return psgdlab::cmd_lowerbounds(opt, std::cout);
    return psgdlab::cmd_verify(opt, std::cout);
  } catch (const psgdlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const psgdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
