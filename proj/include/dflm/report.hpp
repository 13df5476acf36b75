#pragma once

#include "dflm/bench.hpp"
#include "dflm/lm_solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dflm {

/// Iteration history CSV with columns exactly:
/// k, fevals, f, grad_model_norm, theta, lambda, rho, step_norm, accepted, p
void write_history_csv(std::ostream& os, const RunRecord& rec);

/// Run-summary CSV with columns exactly:
/// solver, problem, seed, final_f, fevals, stop_reason, wall_time_ms
void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records);

/// Profile CSV: header `alpha,<solver>...`, one row per grid point.
void write_profile_csv(std::ostream& os, const PerformanceProfile& prof);

/// Static SVG line plot of pi_s against log2(alpha). No scripts, byte-stable
/// for identical inputs.
void write_profile_svg(std::ostream& os, const PerformanceProfile& prof);

/// Record persistence for the bench -> profile pipeline (traces, not full
/// iteration histories).
void write_records_json(std::ostream& os, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_json(std::istream& is);

}  // namespace dflm
