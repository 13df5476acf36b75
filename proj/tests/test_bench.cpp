#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dflm/bench.hpp"
#include "dflm/report.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using namespace dflm;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RunRecord synthetic(const std::string& solver, const std::string& problem, std::uint64_t seed,
                    std::vector<TracePoint> trace, long budget = 1000) {
  RunRecord r;
  r.solver_id = solver;
  r.problem_id = problem;
  r.seed = seed;
  r.n = 10;
  r.budget = budget;
  r.trace = std::move(trace);
  r.f0 = r.trace.front().best_f;
  r.final_f = r.trace.back().best_f;
  r.stop = StopReason::SmallStep;
  return r;
}

// minimal well-formedness scan: balanced tags, quoted attributes, one root
bool xml_well_formed(const std::string& s) {
  std::vector<std::string> stack;
  size_t i = 0;
  int roots = 0;
  if (s.rfind("<?xml", 0) != 0) return false;
  while (i < s.size()) {
    if (s[i] != '<') {
      ++i;
      continue;
    }
    size_t end = s.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = s.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?') continue;
    if (tag[0] == '/') {
      if (stack.empty()) return false;
      if (stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      if (stack.empty()) ++roots;
      continue;
    }
    size_t quotes = 0;
    for (char c : tag)
      if (c == '"') ++quotes;
    if (quotes % 2 != 0) return false;
    if (tag.back() == '/') continue;  // self-closing
    std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
    stack.push_back(name);
  }
  return stack.empty() && roots == 1;
}

}  // namespace

TEST_CASE("run_suite: records per triple, deterministic, isolated failures") {
  // n = 12 keeps the chance of a rank-deficient Bernoulli draw (duplicate or
  // negated direction pair, which makes the noiseless rows inconsistent for a
  // nonlinear map) negligible at p = 4
  std::vector<Problem> problems = {broyden_tridiagonal(12)};

  Problem poison;
  poison.name = "poison";
  poison.n = 4;
  poison.m = 4;
  poison.initial_point = VectorXd::Zero(4);
  poison.eval = [](const VectorXd& x) {
    return VectorXd(VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN()));
  };
  problems.push_back(poison);

  std::vector<SolverSpec> solvers = {solver_spec_from_id("dflm-p3"),
                                     solver_spec_from_id("fd-lm")};
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  SolverConfig base;
  auto recs = run_suite(problems, solvers, seeds, base, 2);
  CHECK(recs.size() == 2 * 2 * 3);

  int errors = 0, clean = 0;
  for (const auto& r : recs) {
    if (r.problem_id == "poison") {
      CHECK(r.stop == StopReason::Error);
      ++errors;
    } else {
      CHECK(r.stop != StopReason::Error);
      ++clean;
    }
  }
  CHECK(errors == 6);
  CHECK(clean == 6);

  // identical config: byte-identical summaries, independent of worker count
  auto recs2 = run_suite(problems, solvers, seeds, base, 1);
  std::ostringstream a, b;
  write_summary_csv(a, recs);
  write_summary_csv(b, recs2);
  auto strip_wall = [](std::string s) {
    std::string out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  CHECK(strip_wall(a.str()) == strip_wall(b.str()));

  CHECK_THROWS_AS(run_suite(problems, solvers, {}, base), std::invalid_argument);
}

TEST_CASE("least_fevals thresholds") {
  auto r = synthetic("s", "p", 1, {{1, 100.0}, {10, 50.0}, {40, 1.0}, {80, 1.0}});
  std::vector<const RunRecord*> cell = {&r};

  // f_star reached at feval 40; any tau crosses at or before 40
  CHECK(least_fevals(cell, 1e-4, 100.0, 1.0) == 40.0);
  CHECK(least_fevals(cell, 0.6, 100.0, 1.0) == 10.0);  // threshold 60.4

  // never below the threshold
  auto r2 = synthetic("s", "p", 1, {{1, 100.0}, {80, 90.0}});
  std::vector<const RunRecord*> cell2 = {&r2};
  CHECK(least_fevals(cell2, 1e-4, 100.0, 1.0) == kInf);

  // already optimal at the start: the first trace entry counts
  CHECK(least_fevals(cell, 0.5, 100.0, 100.0) == 1.0);

  // crossing beyond the budget is a failure
  auto r3 = synthetic("s", "p", 1, {{1, 100.0}, {1200, 0.5}}, 1000);
  std::vector<const RunRecord*> cell3 = {&r3};
  CHECK(least_fevals(cell3, 1e-4, 100.0, 0.5) == kInf);

  CHECK_THROWS_AS(least_fevals(cell, 1.5, 100.0, 1.0), std::invalid_argument);
}

TEST_CASE("averaging: union grid with last-value carry-forward") {
  auto r1 = synthetic("s", "p", 1, {{1, 10.0}, {5, 4.0}, {9, 2.0}});
  auto r2 = synthetic("s", "p", 2, {{1, 8.0}, {7, 0.0}});
  auto avg = average_traces({&r1, &r2});
  REQUIRE(avg.fevals == std::vector<long>({1, 5, 7, 9}));
  CHECK(avg.mean_best_f[0] == 9.0);   // (10 + 8) / 2
  CHECK(avg.mean_best_f[1] == 6.0);   // (4 + 8) / 2
  CHECK(avg.mean_best_f[2] == 2.0);   // (4 + 0) / 2
  CHECK(avg.mean_best_f[3] == 1.0);   // (2 + 0) / 2

  // self-consistency: thresholding the average reproduces least_fevals
  double f0 = 9.0, fstar = 1.0;
  double tau = 0.25;
  double threshold = tau * f0 + (1 - tau) * fstar;  // 3.0
  double expected = kInf;
  for (size_t i = 0; i < avg.fevals.size(); ++i)
    if (avg.mean_best_f[i] <= threshold) {
      expected = static_cast<double>(avg.fevals[i]);
      break;
    }
  CHECK(least_fevals({&r1, &r2}, tau, f0, fstar) == expected);
  CHECK(expected == 7.0);
}

TEST_CASE("profile hand example and edge cases") {
  FevalMatrix m;
  m.tau = 1e-4;
  m.solver_ids = {"a", "b"};
  m.problem_ids = {"p"};
  m.N = {{10.0}, {20.0}};
  auto prof = profile(m);
  REQUIRE(prof.alphas.front() == 1.0);
  CHECK(prof.pi[0][0] == 1.0);
  CHECK(prof.pi[1][0] == 0.0);
  for (size_t i = 0; i < prof.alphas.size(); ++i) {
    if (prof.alphas[i] >= 2.0) {
      CHECK(prof.pi[1][i] == 1.0);
    } else {
      CHECK(prof.pi[1][i] == 0.0);
    }
    CHECK(prof.pi[0][i] == 1.0);
  }

  // single solver, all finite: identically 1
  FevalMatrix one;
  one.tau = 1e-2;
  one.solver_ids = {"only"};
  one.problem_ids = {"p1", "p2"};
  one.N = {{10.0, 30.0}};
  auto prof1 = profile(one);
  for (double v : prof1.pi[0]) CHECK(v == 1.0);

  // all-infinity column contributes zero everywhere; all-fail problems stay
  // in the denominator
  FevalMatrix f;
  f.tau = 1e-2;
  f.solver_ids = {"a", "b"};
  f.problem_ids = {"p1", "p2"};
  f.N = {{kInf, 10.0}, {kInf, kInf}};
  auto prof2 = profile(f);
  for (double v : prof2.pi[1]) CHECK(v == 0.0);
  for (double v : prof2.pi[0]) CHECK(v <= 0.5);  // p1 never counts
  CHECK(prof2.pi[0].back() == 0.5);
}

TEST_CASE("profile invariants on a random-ish matrix") {
  FevalMatrix m;
  m.tau = 1e-6;
  m.solver_ids = {"a", "b", "c"};
  m.problem_ids = {"p1", "p2", "p3", "p4", "p5"};
  m.N = {{12, 400, kInf, 77, 5}, {13, 200, kInf, 77, 10}, {kInf, 100, kInf, 300, 5}};
  auto prof = profile(m);
  size_t finite_min_problems = 4;
  double sum_pi1 = 0.0;
  for (size_t s = 0; s < 3; ++s) {
    REQUIRE(prof.pi[s].size() == prof.alphas.size());
    for (size_t i = 0; i < prof.pi[s].size(); ++i) {
      CHECK(prof.pi[s][i] >= 0.0);
      CHECK(prof.pi[s][i] <= 1.0);
      if (i > 0) CHECK(prof.pi[s][i] >= prof.pi[s][i - 1]);
    }
    sum_pi1 += prof.pi[s][0];
  }
  // every problem with a finite minimum has a winner at alpha = 1
  CHECK(sum_pi1 * 5.0 >= static_cast<double>(finite_min_problems));
}

TEST_CASE("csv and svg emission") {
  FevalMatrix m;
  m.tau = 1e-4;
  m.solver_ids = {"alpha&co", "beta<solver>"};
  m.problem_ids = {"p1", "p2"};
  m.N = {{10.0, 25.0}, {20.0, kInf}};
  auto prof = profile(m);

  std::ostringstream csv1, csv2;
  write_profile_csv(csv1, prof);
  write_profile_csv(csv2, prof);
  CHECK(csv1.str() == csv2.str());  // re-emission is byte-identical
  std::istringstream lines(csv1.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "alpha,alpha&co,beta<solver>");
  size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == prof.alphas.size());

  std::ostringstream svg1, svg2;
  write_profile_svg(svg1, prof);
  write_profile_svg(svg2, prof);
  CHECK(svg1.str() == svg2.str());
  CHECK(xml_well_formed(svg1.str()));
  CHECK(svg1.str().find("alpha&amp;co") != std::string::npos);
}

TEST_CASE("records json round trip") {
  auto r1 = synthetic("s1", "p", 3, {{1, 12.0}, {9, 0.25}});
  RunRecord err;
  err.solver_id = "s2";
  err.problem_id = "p";
  err.seed = 4;
  err.n = 10;
  err.budget = 1000;
  err.stop = StopReason::Error;
  err.stop_detail = "non-finite residual";
  err.final_f = kInf;

  std::ostringstream os;
  write_records_json(os, {r1, err});
  std::istringstream is(os.str());
  auto back = read_records_json(is);
  REQUIRE(back.size() == 2);
  CHECK(back[0].solver_id == "s1");
  CHECK(back[0].trace.size() == 2);
  CHECK(back[0].trace[1].best_f == 0.25);
  CHECK(back[1].stop == StopReason::Error);
  CHECK(std::isinf(back[1].final_f));

  // feval matrix from a mixed record set: the error run never wins
  auto matrix = build_feval_matrix(back, 1e-2);
  REQUIRE(matrix.solver_ids.size() == 2);
  CHECK(std::isfinite(matrix.N[0][0]));
  CHECK(std::isinf(matrix.N[1][0]));
}

TEST_CASE("history csv columns") {
  auto prob = broyden_tridiagonal(8);
  SolverConfig cfg;
  cfg.seed = 12;
  auto rec = solve(prob, cfg);
  std::ostringstream os;
  write_history_csv(os, rec);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "k,fevals,f,grad_model_norm,theta,lambda,rho,step_norm,accepted,p");
  size_t rows = 0;
  for (std::string line; std::getline(is, line);) {
    size_t commas = 0;
    for (char c : line)
      if (c == ',') ++commas;
    CHECK(commas == 9);
    ++rows;
  }
  CHECK(rows == rec.history.size());
}
