#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace psgdlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string observed;
  std::string required;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  unsigned jobs = 1;
};

// Each check pins its own sizes and tolerances.
CheckResult verify_cocoercivity(const VerifyOptions& opt);       // 3e4 random aligned quadratics
CheckResult verify_contractivity(const VerifyOptions& opt);      // 3e4 instances, theta in {0, 1/2, 1}
CheckResult verify_pl_growth(const VerifyOptions& opt);          // 1e4 instances
CheckResult verify_recursion_oracle(const VerifyOptions& opt);   // 6 configs x 1e4 single-pass replicates
CheckResult verify_algo_lower(const VerifyOptions& opt);         // 10 configs, t up to 1e4
CheckResult verify_badP_trend(const VerifyOptions& opt);         // eps in {1/2, 1/4, 1/8}, t = 1e3
CheckResult verify_rank_one(const VerifyOptions& opt);           // 1e3 random (P, H)
CheckResult verify_stability_grid(const VerifyOptions& opt);     // n x t grid, 1e4 replicates
CheckResult verify_multipass_upper(const VerifyOptions& opt);    // proposition schedules, 1e3 replicates
CheckResult verify_minimax_witness(const VerifyOptions& opt);    // 1e4 datasets
CheckResult verify_schedule_lemmas(const VerifyOptions& opt);    // 20 + 20 parameterizations, t up to 1e4
CheckResult verify_pl_risk(const VerifyOptions& opt);            // converged multipass vs PL bound
CheckResult verify_accumulators(const VerifyOptions& opt);       // T and eta_bar vs direct sums

// geometry | schedules | oracles | bounds | all
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opt);

std::string format_check(const CheckResult& r);

}  // namespace psgdlab
