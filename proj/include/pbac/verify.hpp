#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pbac {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest deviation or slack observed
};

// Finite-chain identity sweep: general TD-risk identity, Bellman contraction,
// and value-gap bounds on random chains; the i.i.d.-form identity on
// identical-rows chains; plus its documented failure on the deterministic
// 2-state swap chain (the i.i.d. step does not hold there, and the suite
// asserts that it does not).
std::vector<CheckResult> run_oracle_suite(int random_mdps = 200, std::uint64_t seed = 7);

// Central finite differences vs analytic gradients for the ensemble critic
// loss, the multi-head actor loss, and the prior-perturbed TD loss, on small
// random networks. `configs` is split across the three objectives.
std::vector<CheckResult> run_gradient_checks(int configs = 100, std::uint64_t seed = 11,
                                             double tolerance = 1e-4);

// Worked constant-critic example of the three-term loss and the KL
// diagnostic, checked against hand-computed values.
std::vector<CheckResult> run_hand_value_checks();

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace pbac
