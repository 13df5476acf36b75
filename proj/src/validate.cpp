#include "dflm/validate.hpp"

#include "dflm/bench.hpp"
#include "dflm/format.hpp"
#include "dflm/jacobian_model.hpp"
#include "dflm/lm_solver.hpp"
#include "dflm/problems.hpp"
#include "dflm/sensing.hpp"
#include "dflm/sparse_recovery.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace dflm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SensingMatrix identity_sensing(int n) {
  SensingMatrix s;
  s.entries = MatrixXd::Identity(n, n);
  s.p = n;
  s.n = n;
  return s;
}

}  // namespace

std::vector<CheckResult> run_validation(const ValidateOptions& opts) {
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    CheckResult r;
    r.name = name;
    try {
      auto [pass, detail] = fn();
      r.pass = pass;
      r.detail = detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  };

  check("sensing/bernoulli-row-norm", [] {
    auto A = generate(4, 16, Distribution::Bernoulli, 123);
    double want = std::sqrt(16.0 / 4.0);
    double err = (A.entries.rowwise().norm().array() - want).abs().maxCoeff();
    return std::make_pair(err <= 1e-12, "max row-norm error " + g17(err));
  });

  check("sensing/determinism", [] {
    auto a = generate(6, 20, Distribution::Gaussian, 9);
    auto b = generate(6, 20, Distribution::Gaussian, 9);
    auto c = generate(6, 20, Distribution::Gaussian, 10);
    bool same = (a.entries - b.entries).cwiseAbs().maxCoeff() == 0.0;
    bool diff = (a.entries - c.entries).cwiseAbs().maxCoeff() > 0.0;
    return std::make_pair(same && diff, std::string("same-seed identical, new-seed distinct"));
  });

  check("sensing/recommended-p", [] {
    bool ok = recommended_p(100, 5, 1.0) == 24 && recommended_p(1000, 1, 0.5) == 25;
    for (int s = 2; s <= 20; ++s)
      ok = ok && recommended_p(100, s, 1.0) >= recommended_p(100, s - 1, 1.0);
    return std::make_pair(ok, std::string("sizing rule values and monotonicity"));
  });

  check("sensing/rip-identity", [] {
    MatrixXd I = MatrixXd::Identity(8, 8);
    double worst = 0.0;
    for (int s = 1; s <= 8; ++s) worst = std::max(worst, rip_constant_bruteforce(I, s));
    return std::make_pair(worst <= 1e-12, "max delta over s: " + g17(worst));
  });

  check("recovery/bp-identity", [&] {
    RecoveryProblem prob;
    prob.A = MatrixXd::Identity(4, 4);
    prob.b = (VectorXd(4) << 0, 2, 0, 0).finished();
    auto res = bp_solve(prob);
    double err = (res.g - prob.b).norm();
    return std::make_pair(res.status == RecoveryStatus::Optimal && err <= opts.recovery_tol,
                          "recovery error " + g17(err));
  });

  check("recovery/bp-spike", [&] {
    // seed chosen so the brute-force oracle confirms xhat as the l1 minimizer
    auto A = generate(8, 20, Distribution::Gaussian, 1);
    VectorXd xhat = VectorXd::Zero(20);
    xhat[2] = 2.5;
    xhat[6] = -1.0;
    RecoveryProblem prob{A.entries, A.entries * xhat, 0.0};
    auto res = bp_solve(prob);
    double err = (res.g - xhat).norm();
    return std::make_pair(res.status == RecoveryStatus::Optimal && err <= opts.recovery_tol,
                          "recovery error " + g17(err));
  });

  check("recovery/bpdn-shrinkage", [&] {
    RecoveryProblem prob;
    prob.A = MatrixXd::Identity(2, 2);
    prob.b = (VectorXd(2) << 5, 0).finished();
    prob.xi = 1.0;
    auto res = bpdn_solve(prob);
    VectorXd want = (VectorXd(2) << 4, 0).finished();
    double err = (res.g - want).norm();
    return std::make_pair(err <= std::max(1e-6, opts.recovery_tol), "error " + g17(err));
  });

  check("recovery/oracle-identity", [] {
    RecoveryProblem prob;
    prob.A = MatrixXd::Identity(3, 3);
    prob.b = (VectorXd(3) << 1, 0, 0).finished();
    auto res = brute_force_oracle(prob, 1);
    return std::make_pair((res.g - prob.b).norm() == 0.0, std::string("e1 recovered"));
  });

  check("model/linear-exact", [&] {
    const int n = 6;
    MatrixXd M = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      M(i, i) = 2.0 + i;
      M(i, (i + 2) % n) = -1.0;
    }
    Problem lin;
    lin.name = "lin";
    lin.n = n;
    lin.m = n;
    lin.initial_point = VectorXd::Zero(n);
    lin.eval = [M](const VectorXd& x) { return VectorXd(M * x); };
    auto set = build_interpolation_set(lin, lin.initial_point, lin.eval(lin.initial_point), 1.0,
                                       identity_sensing(n));
    auto model = assemble_jacobian(set, ModelMode::Noiseless);
    double err = (model.J - M).cwiseAbs().maxCoeff();
    return std::make_pair(err <= std::max(1e-8, opts.recovery_tol), "max error " + g17(err));
  });

  check("model/sigma-invariance", [&] {
    const int n = 8, p = 4;
    MatrixXd M = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) M(i, i) = 1.0 + 0.25 * i;
    Problem lin;
    lin.name = "lin";
    lin.n = n;
    lin.m = n;
    lin.initial_point = VectorXd::Zero(n);
    lin.eval = [M](const VectorXd& x) { return VectorXd(M * x); };
    auto A = generate(p, n, Distribution::Bernoulli, 3);
    MatrixXd ref;
    double worst = 0.0;
    for (double sigma : {1e-9, 1e-7, 1e-1}) {
      auto set = build_interpolation_set(lin, lin.initial_point, lin.eval(lin.initial_point),
                                         sigma, A);
      auto model = assemble_jacobian(set, ModelMode::Noiseless);
      if (ref.size() == 0)
        ref = model.J;
      else
        worst = std::max(worst, (model.J - ref).cwiseAbs().maxCoeff());
    }
    return std::make_pair(worst <= std::max(1e-8, opts.recovery_tol),
                          "max sigma spread " + g17(worst));
  });

  check("solver/theta-update-table", [] {
    SolverConfig cfg;
    bool ok = update_theta(1e-8, 0.0, 1.0, cfg) == 4e-8;          // rejected: grow
    ok = ok && update_theta(1.0, 0.5, 1.0, cfg) == 1.0;           // inside the band: keep
    ok = ok && update_theta(1.0, 0.5, 2000.0, cfg) == 0.25;       // above eta2/theta: shrink
    ok = ok && update_theta(1e-8, 0.5, 2e11, cfg) == 1e-8;        // shrink clamps at theta_min
    return std::make_pair(ok, std::string("four table branches"));
  });

  check("solver/small-linear", [] {
    Problem lin;
    lin.name = "lin2";
    lin.n = 2;
    lin.m = 2;
    lin.initial_point = (VectorXd(2) << 1, 1).finished();
    lin.eval = [](const VectorXd& x) { return x; };
    SolverConfig cfg;
    cfg.distribution = Distribution::Gaussian;
    cfg.p_schedule = PSchedule::fixed(2);
    cfg.seed = 5;
    auto rec = solve(lin, cfg);
    bool ok = rec.stop != StopReason::Error && rec.fevals <= 200 && rec.x_final.norm() <= 1e-5;
    return std::make_pair(ok, "fevals " + std::to_string(rec.fevals) + ", |x| " +
                                  g17(rec.x_final.norm()));
  });

  check("solver/feval-ledger", [] {
    long count = 0;
    Problem p = broyden_tridiagonal(12);
    auto inner = p.eval;
    p.eval = [&count, inner](const VectorXd& x) {
      ++count;
      return inner(x);
    };
    SolverConfig cfg;
    cfg.seed = 17;
    cfg.p_schedule = PSchedule::fixed(5);
    auto rec = solve(p, cfg);
    return std::make_pair(rec.stop != StopReason::Error && count == rec.fevals,
                          "counted " + std::to_string(count) + " recorded " +
                              std::to_string(rec.fevals));
  });

  check("profile/hand-example", [] {
    FevalMatrix m;
    m.tau = 1e-4;
    m.solver_ids = {"a", "b"};
    m.problem_ids = {"p"};
    m.N = {{10.0}, {20.0}};
    auto prof = profile(m);
    auto pi_at = [&](size_t s, double alpha) {
      double v = 0.0;
      for (size_t i = 0; i < prof.alphas.size(); ++i)
        if (prof.alphas[i] <= alpha + 1e-12) v = prof.pi[s][i];
      return v;
    };
    bool ok = pi_at(0, 1.0) == 1.0 && pi_at(1, 1.0) == 0.0 && pi_at(1, 2.0) == 1.0;
    return std::make_pair(ok, std::string("pi values at alpha = 1, 2"));
  });

  check("profile/monotone-range", [] {
    FevalMatrix m;
    m.tau = 1e-2;
    m.solver_ids = {"a", "b", "c"};
    m.problem_ids = {"p1", "p2", "p3", "p4"};
    double inf = std::numeric_limits<double>::infinity();
    m.N = {{10, 40, inf, 100}, {20, 20, inf, 50}, {inf, 80, inf, 25}};
    auto prof = profile(m);
    bool ok = true;
    for (const auto& curve : prof.pi) {
      for (size_t i = 0; i < curve.size(); ++i) {
        ok = ok && curve[i] >= 0.0 && curve[i] <= 1.0;
        if (i > 0) ok = ok && curve[i] >= curve[i - 1];
      }
    }
    return std::make_pair(ok, std::string("pi monotone in [0,1]"));
  });

  return out;
}

}  // namespace dflm
