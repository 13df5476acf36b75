#pragma once

#include <string>
#include <vector>

namespace dflm {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidateOptions {
  // pass threshold for the recovery checks; tightening it below what the
  // solvers deliver turns the corresponding checks red
  double recovery_tol = 1e-6;
  bool verbose = false;
};

/// Small-scale invariant suite over the sensing, recovery, model, solver and
/// profile layers. Pure and fast; intended for `dflm validate`.
std::vector<CheckResult> run_validation(const ValidateOptions& opts = {});

}  // namespace dflm
