#pragma once

#include <string>
#include <vector>

namespace fedrep {

/// Outcome of one verification check. `expected_fail` marks negative
/// controls: those pass exactly when the guarded property is violated.
struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double millis = 0.0;
  double budget_ms = 0.0;  // 0: no runtime budget
};

/// Runs the full deterministic verification battery: the convergence
/// identities of the full-measurement engine, the federated contraction
/// bound, the oracle cross-checks, baseline orderings, determinism, and a
/// negative control with an oversized step.
std::vector<CheckResult> run_verification_battery();

/// True when every check passed (budgets included).
bool all_passed(const std::vector<CheckResult>& results);

/// Fixed-width pass/fail table for terminal output.
std::string render_check_table(const std::vector<CheckResult>& results);

}  // namespace fedrep
