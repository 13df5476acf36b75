#pragma once

#include "dflm/lm_solver.hpp"

#include <json.hpp>

namespace dflm {

/// JSON image of a SolverConfig. Round-trips exactly:
/// solver_config_from_json(solver_config_to_json(c)) == c.
nlohmann::json solver_config_to_json(const SolverConfig& cfg);

/// Parses a config document. Missing keys keep their defaults; unknown keys
/// are rejected (they are almost always typos).
SolverConfig solver_config_from_json(const nlohmann::json& j);

/// Full run summary: outcome fields plus the resolved config and seed, enough
/// to reproduce the run exactly.
nlohmann::json run_summary_json(const RunRecord& rec);

}  // namespace dflm
