#include "dflm/config_io.hpp"

#include <set>
#include <stdexcept>

namespace dflm {

using nlohmann::json;

namespace {

std::string policy_name(PSchedule::Policy p) {
  switch (p) {
    case PSchedule::Policy::Fixed: return "fixed";
    case PSchedule::Policy::FixedFraction: return "fixed-fraction";
    case PSchedule::Policy::Adaptive: return "adaptive";
  }
  return "unknown";
}

PSchedule::Policy policy_from_name(const std::string& s) {
  if (s == "fixed") return PSchedule::Policy::Fixed;
  if (s == "fixed-fraction") return PSchedule::Policy::FixedFraction;
  if (s == "adaptive") return PSchedule::Policy::Adaptive;
  throw std::invalid_argument("unknown p policy: " + s);
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown key in " + where + ": " + key);
}

}  // namespace

json solver_config_to_json(const SolverConfig& c) {
  json p = {{"policy", policy_name(c.p_schedule.policy)}};
  switch (c.p_schedule.policy) {
    case PSchedule::Policy::Fixed:
      p["p"] = c.p_schedule.p;
      break;
    case PSchedule::Policy::FixedFraction:
      p["denominator"] = c.p_schedule.denominator;
      break;
    case PSchedule::Policy::Adaptive:
      p["p_init"] = c.p_schedule.p_init;
      p["p_min"] = c.p_schedule.p_min;
      p["p_max"] = c.p_schedule.p_max;
      p["p_diff"] = c.p_schedule.p_diff;
      break;
  }
  return json{
      {"eta0", c.eta0},
      {"eta1", c.eta1},
      {"eta2", c.eta2},
      {"gamma1", c.gamma1},
      {"gamma2", c.gamma2},
      {"theta0", c.theta0},
      {"theta_min", c.theta_min},
      {"epsilon0", c.epsilon0},
      {"sigma0", c.sigma0},
      {"sigma_bounds", json::array({c.sigma_lo, c.sigma_hi})},
      {"sigma_theory_mode", c.sigma_theory_mode},
      {"max_fevals", c.max_fevals},
      {"distribution", to_string(c.distribution)},
      {"p_policy", p},
      {"mode", c.mode == ModelMode::Noiseless ? "noiseless" : "denoising"},
      {"denoise_xi", c.denoise_xi},
      {"lipschitz_estimate", c.lipschitz_estimate},
      {"step_tol", c.step_tol},
      {"rel_decrease_tol", c.rel_decrease_tol},
      {"seed", c.seed},
      {"check_invariants", c.check_invariants},
      {"recovery",
       {{"feasibility_tol", c.recovery.feasibility_tol},
        {"optimality_tol", c.recovery.optimality_tol},
        {"max_iterations", c.recovery.max_iterations}}},
  };
}

SolverConfig solver_config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "eta0",        "eta1",       "eta2",          "gamma1",
      "gamma2",      "theta0",     "theta_min",     "epsilon0",
      "sigma0",      "sigma_bounds", "sigma_theory_mode", "max_fevals",
      "distribution", "p_policy",  "mode",          "denoise_xi",
      "lipschitz_estimate", "step_tol", "rel_decrease_tol", "seed",
      "check_invariants", "recovery"};
  reject_unknown_keys(j, known, "config");

  SolverConfig c;
  if (j.contains("eta0")) c.eta0 = j["eta0"].get<double>();
  if (j.contains("eta1")) c.eta1 = j["eta1"].get<double>();
  if (j.contains("eta2")) c.eta2 = j["eta2"].get<double>();
  if (j.contains("gamma1")) c.gamma1 = j["gamma1"].get<double>();
  if (j.contains("gamma2")) c.gamma2 = j["gamma2"].get<double>();
  if (j.contains("theta0")) c.theta0 = j["theta0"].get<double>();
  if (j.contains("theta_min")) c.theta_min = j["theta_min"].get<double>();
  if (j.contains("epsilon0")) c.epsilon0 = j["epsilon0"].get<double>();
  if (j.contains("sigma0")) c.sigma0 = j["sigma0"].get<double>();
  if (j.contains("sigma_bounds")) {
    const auto& b = j["sigma_bounds"];
    if (!b.is_array() || b.size() != 2)
      throw std::invalid_argument("config: sigma_bounds must be [lo, hi]");
    c.sigma_lo = b[0].get<double>();
    c.sigma_hi = b[1].get<double>();
  }
  if (j.contains("sigma_theory_mode")) c.sigma_theory_mode = j["sigma_theory_mode"].get<bool>();
  if (j.contains("max_fevals")) c.max_fevals = j["max_fevals"].get<long>();
  if (j.contains("distribution"))
    c.distribution = distribution_from_string(j["distribution"].get<std::string>());
  if (j.contains("p_policy")) {
    const json& p = j["p_policy"];
    static const std::set<std::string> pknown = {"policy", "p",     "denominator",
                                                 "p_init", "p_min", "p_max",
                                                 "p_diff"};
    reject_unknown_keys(p, pknown, "p_policy");
    c.p_schedule.policy = policy_from_name(p.at("policy").get<std::string>());
    if (p.contains("p")) c.p_schedule.p = p["p"].get<int>();
    if (p.contains("denominator")) c.p_schedule.denominator = p["denominator"].get<int>();
    if (p.contains("p_init")) c.p_schedule.p_init = p["p_init"].get<int>();
    if (p.contains("p_min")) c.p_schedule.p_min = p["p_min"].get<int>();
    if (p.contains("p_max")) c.p_schedule.p_max = p["p_max"].get<int>();
    if (p.contains("p_diff")) c.p_schedule.p_diff = p["p_diff"].get<int>();
  }
  if (j.contains("mode")) {
    std::string m = j["mode"].get<std::string>();
    if (m == "noiseless")
      c.mode = ModelMode::Noiseless;
    else if (m == "denoising")
      c.mode = ModelMode::Denoising;
    else
      throw std::invalid_argument("config: unknown mode " + m);
  }
  if (j.contains("denoise_xi")) c.denoise_xi = j["denoise_xi"].get<double>();
  if (j.contains("lipschitz_estimate")) c.lipschitz_estimate = j["lipschitz_estimate"].get<double>();
  if (j.contains("step_tol")) c.step_tol = j["step_tol"].get<double>();
  if (j.contains("rel_decrease_tol")) c.rel_decrease_tol = j["rel_decrease_tol"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("check_invariants")) c.check_invariants = j["check_invariants"].get<bool>();
  if (j.contains("recovery")) {
    const json& r = j["recovery"];
    static const std::set<std::string> rknown = {"feasibility_tol", "optimality_tol",
                                                 "max_iterations"};
    reject_unknown_keys(r, rknown, "recovery");
    if (r.contains("feasibility_tol")) c.recovery.feasibility_tol = r["feasibility_tol"].get<double>();
    if (r.contains("optimality_tol")) c.recovery.optimality_tol = r["optimality_tol"].get<double>();
    if (r.contains("max_iterations")) c.recovery.max_iterations = r["max_iterations"].get<int>();
  }
  return c;
}

json run_summary_json(const RunRecord& rec) {
  json x = json::array();
  for (Eigen::Index i = 0; i < rec.x_final.size(); ++i) x.push_back(rec.x_final[i]);
  return json{
      {"solver", rec.solver_id},
      {"problem", rec.problem_id},
      {"n", rec.n},
      {"m", rec.m},
      {"seed", rec.seed},
      {"budget", rec.budget},
      {"fevals", rec.fevals},
      {"f0", rec.f0},
      {"final_f", rec.final_f},
      {"stop_reason", to_string(rec.stop)},
      {"stop_detail", rec.stop_detail},
      {"wall_time_ms", rec.wall_time_ms},
      {"lm_retries", rec.lm_retries},
      {"x_final", x},
      {"config", solver_config_to_json(rec.config)},
  };
}

}  // namespace dflm
