#pragma once

#include "dflm/lm_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dflm {

/// One column of the benchmark matrix: a solver identity applied to the base
/// SolverConfig. The default matrix is the DFLM variants with
/// p = ceil(n/2), ceil(n/3), ceil(n/4) and adaptive, plus the
/// finite-difference baseline.
struct SolverSpec {
  enum class Kind { Dflm, FdBaseline };
  std::string id;
  Kind kind = Kind::Dflm;
  PSchedule p_schedule{};
};

std::vector<SolverSpec> default_solver_matrix();
SolverSpec solver_spec_from_id(const std::string& id);

/// Runs every (problem, solver, seed) triple. Each run derives its RNG stream
/// from (solver id, problem id, seed), so results are independent of worker
/// scheduling. Individual failures are recorded with stop_reason = error and
/// never abort the suite. workers = 0 picks the SPARSE_DFLM_THREADS cap or
/// the hardware concurrency.
std::vector<RunRecord> run_suite(const std::vector<Problem>& problems,
                                 const std::vector<SolverSpec>& solvers,
                                 const std::vector<std::uint64_t>& seeds,
                                 const SolverConfig& base, int workers = 0);

/// Worker cap from the SPARSE_DFLM_THREADS environment variable (hardware
/// concurrency when unset).
int worker_cap();

/// Pointwise mean of best-f traces over the union feval grid with last-value
/// carry-forward.
struct AveragedTrace {
  std::vector<long> fevals;
  std::vector<double> mean_best_f;
};
AveragedTrace average_traces(const std::vector<const RunRecord*>& runs);

/// Least feval count at which the averaged trace reaches
/// tau * f0 + (1 - tau) * f_star; +inf when that never happens within the
/// runs' evaluation budget.
double least_fevals(const std::vector<const RunRecord*>& runs, double tau, double f0,
                    double f_star);

/// N_{s,p} matrix for one accuracy level tau, grouped from raw records.
/// f0 and f_star are per problem; f_star is the smallest final best-f reached
/// by any solver/record for that problem.
struct FevalMatrix {
  double tau = 0.0;
  std::vector<std::string> solver_ids;
  std::vector<std::string> problem_ids;
  std::vector<std::vector<double>> N;  // [solver][problem], +inf for failures
};
FevalMatrix build_feval_matrix(const std::vector<RunRecord>& records, double tau);

/// pi_s(alpha) curves on a log2-spaced alpha grid. Problems where every
/// solver failed stay in the denominator and contribute to no numerator.
struct PerformanceProfile {
  double tau = 0.0;
  std::vector<std::string> solver_ids;
  std::vector<std::string> problem_ids;
  std::vector<std::vector<double>> N;
  std::vector<double> alphas;
  std::vector<std::vector<double>> pi;  // [solver][alpha index]
};
PerformanceProfile profile(const FevalMatrix& m);

}  // namespace dflm
