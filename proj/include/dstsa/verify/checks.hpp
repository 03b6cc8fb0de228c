#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dstsa::verify {

struct CheckOutcome {
  bool passed = false;
  std::string detail;  // measured values against their bounds, or the first failure
};

struct Check {
  std::string name;
  std::function<CheckOutcome()> run;
};

struct CheckReport {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Each check pins its own tolerances.
CheckOutcome gradient_integrity();          // every op and layer <= 1e-5, micro-model <= 1e-4
CheckOutcome reduction_oracle();            // 20 instances vs the single-subset baseline, 1e-12
CheckOutcome grouping_oracle();             // K in {2, 4, 8} vs per-group slices, 1e-12
CheckOutcome permutation_equivariance();    // V = T = 6, 1e-10
CheckOutcome pooling_normalization();       // weights sum to 1 +- 1e-6, TGP within frame range
CheckOutcome parameter_group_independence();  // K = 8 minus K = 4 is 4 V^2
CheckOutcome schedule_steps();              // lr_at(75) == 0.01, lr_at(105) == 0.001
// Runs a reduced gradient check with the tanh backward sign flip injected;
// passes when that check fails. Restores the previous fault setting.
CheckOutcome mutation_smoke();
CheckOutcome cam_logit_identity();          // pooled CAM + bias == logit, 1e-10
CheckOutcome resume_determinism();          // resumed epoch loss equals the uninterrupted one

// Criteria 1-7 in order.
std::vector<Check> criterion_checks();
// criterion_checks() followed by the mutation smoke, CAM and resume checks.
std::vector<Check> verify_suite();

// Times the check; an escaping exception is reported as a failure.
CheckReport run_check(const Check& check);

}  // namespace dstsa::verify
