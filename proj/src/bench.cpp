#include "dflm/bench.hpp"

#include "dflm/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace dflm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<SolverSpec> default_solver_matrix() {
  return {
      {"dflm-p2", SolverSpec::Kind::Dflm, PSchedule::fraction(2)},
      {"dflm-p3", SolverSpec::Kind::Dflm, PSchedule::fraction(3)},
      {"dflm-p4", SolverSpec::Kind::Dflm, PSchedule::fraction(4)},
      {"dflm-adaptive", SolverSpec::Kind::Dflm, PSchedule::adaptive()},
      {"fd-lm", SolverSpec::Kind::FdBaseline, PSchedule::adaptive()},
  };
}

SolverSpec solver_spec_from_id(const std::string& id) {
  for (const auto& s : default_solver_matrix())
    if (s.id == id) return s;
  throw std::invalid_argument("unknown solver id: " + id);
}

int worker_cap() {
  if (const char* env = std::getenv("SPARSE_DFLM_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::vector<RunRecord> run_suite(const std::vector<Problem>& problems,
                                 const std::vector<SolverSpec>& solvers,
                                 const std::vector<std::uint64_t>& seeds,
                                 const SolverConfig& base, int workers) {
  if (problems.empty() || solvers.empty() || seeds.empty())
    throw std::invalid_argument("run_suite: problems, solvers and seeds must be non-empty");

  struct Task {
    const Problem* problem;
    const SolverSpec* solver;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  tasks.reserve(problems.size() * solvers.size() * seeds.size());
  for (const auto& p : problems)
    for (const auto& s : solvers)
      for (auto seed : seeds) tasks.push_back({&p, &s, seed});

  std::vector<RunRecord> results(tasks.size());
  std::atomic<size_t> next{0};

  auto run_one = [&](size_t i) {
    const Task& t = tasks[i];
    SolverConfig cfg = base;
    cfg.p_schedule = t.solver->p_schedule;
    cfg.seed = mix_seed(mix_seed(fnv1a64(t.solver->id), fnv1a64(t.problem->name)), t.seed);
    RunRecord rec;
    try {
      rec = t.solver->kind == SolverSpec::Kind::Dflm ? solve(*t.problem, cfg)
                                                     : solve_fd_baseline(*t.problem, cfg);
    } catch (const std::exception& e) {
      rec.stop = StopReason::Error;
      rec.stop_detail = e.what();
      rec.problem_id = t.problem->name;
      rec.n = t.problem->n;
      rec.final_f = kInf;
      rec.config = cfg;
    }
    rec.solver_id = t.solver->id;
    rec.seed = t.seed;  // the user-facing seed; the derived stream is in config
    results[i] = std::move(rec);
  };

  int nworkers = workers > 0 ? workers : worker_cap();
  nworkers = std::min<int>(nworkers, static_cast<int>(tasks.size()));
  if (nworkers <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (int w = 0; w < nworkers; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  return results;
}

AveragedTrace average_traces(const std::vector<const RunRecord*>& runs) {
  AveragedTrace out;
  std::set<long> grid;
  for (const auto* r : runs)
    for (const auto& tp : r->trace) grid.insert(tp.fevals);
  if (grid.empty()) return out;

  out.fevals.assign(grid.begin(), grid.end());
  out.mean_best_f.assign(out.fevals.size(), 0.0);
  for (const auto* r : runs) {
    size_t pos = 0;
    double last = r->trace.empty() ? kInf : r->trace.front().best_f;
    for (size_t gi = 0; gi < out.fevals.size(); ++gi) {
      while (pos < r->trace.size() && r->trace[pos].fevals <= out.fevals[gi])
        last = r->trace[pos++].best_f;
      out.mean_best_f[gi] += last;
    }
  }
  for (double& v : out.mean_best_f) v /= static_cast<double>(runs.size());
  return out;
}

double least_fevals(const std::vector<const RunRecord*>& runs, double tau, double f0,
                    double f_star) {
  if (runs.empty()) return kInf;
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("least_fevals: need 0 < tau < 1");
  const double threshold = tau * f0 + (1.0 - tau) * f_star;
  long budget = 0;
  for (const auto* r : runs) budget = std::max(budget, r->budget);

  AveragedTrace avg = average_traces(runs);
  for (size_t i = 0; i < avg.fevals.size(); ++i) {
    if (avg.mean_best_f[i] <= threshold)
      return avg.fevals[i] <= budget ? static_cast<double>(avg.fevals[i]) : kInf;
  }
  return kInf;
}

FevalMatrix build_feval_matrix(const std::vector<RunRecord>& records, double tau) {
  FevalMatrix m;
  m.tau = tau;
  std::set<std::string> solver_set, problem_set;
  for (const auto& r : records) {
    solver_set.insert(r.solver_id);
    problem_set.insert(r.problem_id);
  }
  m.solver_ids.assign(solver_set.begin(), solver_set.end());
  m.problem_ids.assign(problem_set.begin(), problem_set.end());

  m.N.assign(m.solver_ids.size(), std::vector<double>(m.problem_ids.size(), kInf));
  for (size_t pi = 0; pi < m.problem_ids.size(); ++pi) {
    // f0 is shared (same starting point); f_star is the best final value
    // reached by any solver on this problem
    double f0 = kInf;
    double f_star = kInf;
    for (const auto& r : records) {
      if (r.problem_id != m.problem_ids[pi]) continue;
      if (!r.trace.empty()) f0 = std::min(f0, r.f0);
      f_star = std::min(f_star, r.final_f);
    }
    if (f0 == kInf) continue;  // every record errored before the first eval
    for (size_t si = 0; si < m.solver_ids.size(); ++si) {
      std::vector<const RunRecord*> cell;
      for (const auto& r : records)
        if (r.solver_id == m.solver_ids[si] && r.problem_id == m.problem_ids[pi] &&
            !r.trace.empty())
          cell.push_back(&r);
      if (!cell.empty()) m.N[si][pi] = least_fevals(cell, tau, f0, f_star);
    }
  }
  return m;
}

PerformanceProfile profile(const FevalMatrix& m) {
  if (m.solver_ids.empty() || m.problem_ids.empty())
    throw std::invalid_argument("profile: need at least one solver and one problem");

  PerformanceProfile prof;
  prof.tau = m.tau;
  prof.solver_ids = m.solver_ids;
  prof.problem_ids = m.problem_ids;
  prof.N = m.N;

  const size_t ns = m.solver_ids.size();
  const size_t np = m.problem_ids.size();

  std::vector<double> best(np, kInf);
  for (size_t pi = 0; pi < np; ++pi)
    for (size_t si = 0; si < ns; ++si) best[pi] = std::min(best[pi], m.N[si][pi]);

  // log2-spaced grid from 1 up to the largest finite performance ratio
  double max_ratio = 1.0;
  for (size_t pi = 0; pi < np; ++pi)
    for (size_t si = 0; si < ns; ++si)
      if (std::isfinite(m.N[si][pi]) && std::isfinite(best[pi]) && best[pi] > 0.0)
        max_ratio = std::max(max_ratio, m.N[si][pi] / best[pi]);
  const double step = 0.25;  // grid spacing in log2
  int levels = static_cast<int>(std::ceil(std::log2(max_ratio) / step)) + 1;
  levels = std::clamp(levels, 17, 241);  // at least up to alpha = 16
  for (int i = 0; i < levels; ++i) prof.alphas.push_back(std::exp2(step * i));

  prof.pi.assign(ns, std::vector<double>(prof.alphas.size(), 0.0));
  for (size_t si = 0; si < ns; ++si) {
    for (size_t ai = 0; ai < prof.alphas.size(); ++ai) {
      int count = 0;
      for (size_t pi = 0; pi < np; ++pi) {
        if (!std::isfinite(best[pi])) continue;  // all solvers failed: numerator never counts it
        if (m.N[si][pi] <= prof.alphas[ai] * best[pi]) ++count;
      }
      prof.pi[si][ai] = static_cast<double>(count) / static_cast<double>(np);
    }
  }
  return prof;
}

}  // namespace dflm
