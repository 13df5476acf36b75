#pragma once

#include "dflm/jacobian_model.hpp"
#include "dflm/problems.hpp"
#include "dflm/sensing.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace dflm {

/// How the interpolation count p evolves across iterations.
struct PSchedule {
  enum class Policy { Fixed, FixedFraction, Adaptive };
  Policy policy = Policy::Adaptive;
  int p = 0;            // Fixed
  int denominator = 0;  // FixedFraction: p = ceil(n / denominator)
  // Adaptive knobs; 0 = derive from n as ceil(n/3), ceil(n/4), ceil(n/2), ceil(n/10)
  int p_init = 0, p_min = 0, p_max = 0, p_diff = 0;

  static PSchedule fixed(int p) { return {Policy::Fixed, p, 0, 0, 0, 0, 0}; }
  static PSchedule fraction(int den) { return {Policy::FixedFraction, 0, den, 0, 0, 0, 0}; }
  static PSchedule adaptive() { return {}; }
};

struct ResolvedPSchedule {
  bool adaptive = false;
  int p_init = 0, p_min = 0, p_max = 0, p_diff = 0;
};

ResolvedPSchedule resolve(const PSchedule& sched, int n);

/// All algorithm knobs. Defaults follow the reference experimental setup:
/// eta0 = 1e-3, eta1 = 1e-4, eta2 = 1e3, gamma1 = 0.25, gamma2 = 4,
/// theta0 = theta_min = 1e-8, sigma0 = 1, sigma clamped to [1e-9, 1e-7],
/// all stopping tolerances 1e-6, budget 1000 (n+1) residual evaluations.
struct SolverConfig {
  double eta0 = 1e-3;
  double eta1 = 1e-4;
  double eta2 = 1e3;
  double gamma1 = 0.25;
  double gamma2 = 4.0;
  double theta0 = 1e-8;
  double theta_min = 1e-8;
  double epsilon0 = 1e-6;  // model-gradient stationarity stop
  double sigma0 = 1.0;
  double sigma_lo = 1e-9;
  double sigma_hi = 1e-7;
  bool sigma_theory_mode = false;  // sigma_k = ||d_{k-1}|| unclamped
  long max_fevals = 0;             // 0 = 1000 * (n + 1)
  Distribution distribution = Distribution::Bernoulli;
  PSchedule p_schedule{};
  ModelMode mode = ModelMode::Noiseless;
  double denoise_xi = 0.0;          // fixed xi_k for Denoising mode
  double lipschitz_estimate = 0.0;  // >0: xi_k = sqrt(p) klg kbv^2 sigma_k / 2
  double step_tol = 1e-6;
  double rel_decrease_tol = 1e-6;
  std::uint64_t seed = 0;
  bool check_invariants = false;  // record extra per-iteration diagnostics
  RecoveryOptions recovery{};

  void validate() const;  // throws std::invalid_argument on bad settings
};

/// One completed (or stationarity-aborted) iteration. `fevals` is the
/// cumulative count at the end of the iteration; `f` is 1/2 ||F_k||^2 at the
/// iteration's base point.
struct IterationRecord {
  int k = 0;
  long fevals = 0;
  double f = 0.0;
  double grad_model_norm = 0.0;
  double theta = 0.0;
  double lambda = 0.0;
  double rho = 0.0;  // -inf sentinel when Pred <= 0 numerically
  double step_norm = 0.0;
  bool accepted = false;
  int p = 0;
  bool has_step = true;  // false for the stationarity-abort partial record
  // diagnostics for the invariant suite (not part of the CSV schema)
  double pred = 0.0;
  double f_trial = 0.0;
  double gram_norm = 0.0;  // ||J^T J||_2, filled only when check_invariants
};

enum class StopReason {
  StationaryModelGradient,
  SmallStep,
  SmallRelativeDecrease,
  MaxFevals,
  Error,
};

std::string to_string(StopReason r);

struct TracePoint {
  long fevals = 0;
  double best_f = 0.0;
};

/// Everything a run produces: the best-f trace for benchmarking, the full
/// iteration history, and the resolved configuration for reproducibility.
struct RunRecord {
  std::string solver_id;
  std::string problem_id;
  std::uint64_t seed = 0;
  int n = 0;
  int m = 0;
  long budget = 0;
  std::vector<TracePoint> trace;
  double f0 = 0.0;
  double final_f = 0.0;
  StopReason stop = StopReason::Error;
  std::string stop_detail;
  double wall_time_ms = 0.0;
  long fevals = 0;
  int lm_retries = 0;
  Eigen::VectorXd x_final;
  std::vector<IterationRecord> history;
  SolverConfig config;
};

/// Solves (J^T J + lambda I) d = -J^T F with lambda = theta ||J^T F||.
/// Requires ||J^T F|| > 0. The relative residual of the linear solve is
/// driven below 1e-10 (one refinement pass, then a single retry with lambda
/// inflated by 10; retries is incremented when that path triggers).
/// Consequently ||d|| <= 1/theta.
std::pair<Eigen::VectorXd, double> lm_step(const Eigen::MatrixXd& J_m, const Eigen::VectorXd& F_k,
                                           double theta_k, int* retries = nullptr);

/// rho = (||F_k||^2 - ||F_trial||^2) / (||F_k||^2 - ||F_k + J d||^2), with a
/// -inf sentinel when the predicted reduction is not positive numerically.
double ratio(const Eigen::VectorXd& F_k, const Eigen::VectorXd& F_trial,
             const Eigen::MatrixXd& J_m, const Eigen::VectorXd& d_k);
std::pair<double, double> ratio_with_pred(const Eigen::VectorXd& F_k,
                                          const Eigen::VectorXd& F_trial,
                                          const Eigen::MatrixXd& J_m, const Eigen::VectorXd& d_k);

/// theta update table: gamma2*theta on rejection; otherwise grow/keep/shrink
/// by comparing ||J^T F|| against [eta1/theta, eta2/theta], clamped below by
/// theta_min.
double update_theta(double theta_k, double rho_k, double grad_model_norm, const SolverConfig& cfg);

/// sigma_{k+1} = clamp(||d_k||, [sigma_lo, sigma_hi]); unclamped in theory
/// mode.
double update_sigma(double d_prev_norm, const SolverConfig& cfg);

/// Adaptive p move: +p_diff after an accepted step, -p_diff after a rejected
/// one, clamped to [p_min, p_max]. Fixed schedules return p unchanged.
int update_p(int p, bool accepted, const ResolvedPSchedule& sched);

/// The derivative-free LM loop: build model, stationarity check, LM step,
/// ratio test, x/theta/sigma/p updates, until one of the four stopping rules
/// fires. Evaluation errors abort the run with StopReason::Error.
RunRecord solve(const Problem& problem, const SolverConfig& cfg);

/// Identical outer loop with the model Jacobian replaced by a forward
/// finite-difference Jacobian (step 1.5e-8, n extra evaluations per
/// iteration).
RunRecord solve_fd_baseline(const Problem& problem, const SolverConfig& cfg);

}  // namespace dflm
