#pragma once

// Shared between the solver unit tests and the acceptance suite: checks every
// recorded iteration of a run against the algorithm's invariants and returns
// human-readable violations (empty = clean).

#include "dflm/lm_solver.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dflm_test {

inline std::vector<std::string> check_history(const dflm::RunRecord& rec) {
  std::vector<std::string> bad;
  const dflm::SolverConfig& cfg = rec.config;
  auto where = [&](int k) {
    return rec.solver_id + "/" + rec.problem_id + " seed " + std::to_string(rec.seed) +
           " iteration " + std::to_string(k);
  };

  // per-iteration rules
  for (size_t i = 0; i < rec.history.size(); ++i) {
    const auto& it = rec.history[i];
    if (it.theta < cfg.theta_min)
      bad.push_back(where(it.k) + ": theta below theta_min");
    if (!it.has_step) continue;

    bool should_accept = it.rho > cfg.eta0;
    if (it.accepted != should_accept)
      bad.push_back(where(it.k) + ": acceptance rule violated (rho sign test)");

    if (it.step_norm > 1.0 / it.theta + 1e-12)
      bad.push_back(where(it.k) + ": step bound ||d|| <= 1/theta violated");

    if (it.gram_norm > 0.0) {
      double floor = it.grad_model_norm *
                         std::min(it.step_norm, it.grad_model_norm / it.gram_norm) -
                     1e-10 * (2.0 * it.f);
      if (!(it.pred >= floor))
        bad.push_back(where(it.k) + ": predicted-reduction floor violated");
    }

    if (i + 1 < rec.history.size()) {
      double expected;
      if (it.rho < cfg.eta0)
        expected = cfg.gamma2 * it.theta;
      else if (it.grad_model_norm < cfg.eta1 / it.theta)
        expected = cfg.gamma2 * it.theta;
      else if (it.grad_model_norm <= cfg.eta2 / it.theta)
        expected = it.theta;
      else
        expected = std::max(cfg.gamma1 * it.theta, cfg.theta_min);
      if (rec.history[i + 1].theta != expected)
        bad.push_back(where(it.k) + ": theta update table violated");
    }
  }

  // trace monotonicity and the evaluation ledger
  for (size_t i = 1; i < rec.trace.size(); ++i) {
    if (rec.trace[i].fevals <= rec.trace[i - 1].fevals)
      bad.push_back(where(0) + ": trace fevals not strictly increasing");
    if (rec.trace[i].best_f > rec.trace[i - 1].best_f)
      bad.push_back(where(0) + ": best_f not monotone");
  }

  long fevals = 1;  // initial residual evaluation
  for (const auto& it : rec.history) {
    fevals += it.p + (it.has_step ? 1 : 0);
    if (it.fevals != fevals)
      bad.push_back(where(it.k) + ": feval ledger mismatch");
  }
  if (rec.stop != dflm::StopReason::Error && fevals != rec.fevals)
    bad.push_back(where(-1) + ": total feval ledger mismatch");

  return bad;
}

}  // namespace dflm_test
