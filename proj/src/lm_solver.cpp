#include "dflm/lm_solver.hpp"

#include "dflm/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dflm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kFdStep = 1.5e-8;

int ceil_div(int a, int b) { return (a + b - 1) / b; }
}  // namespace

ResolvedPSchedule resolve(const PSchedule& sched, int n) {
  ResolvedPSchedule r;
  switch (sched.policy) {
    case PSchedule::Policy::Fixed:
      if (sched.p < 1) throw std::invalid_argument("p schedule: fixed p must be >= 1");
      r = {false, sched.p, sched.p, sched.p, 0};
      break;
    case PSchedule::Policy::FixedFraction: {
      if (sched.denominator < 1)
        throw std::invalid_argument("p schedule: fraction denominator must be >= 1");
      int p = std::max(1, ceil_div(n, sched.denominator));
      r = {false, p, p, p, 0};
      break;
    }
    case PSchedule::Policy::Adaptive:
      r.adaptive = true;
      r.p_init = sched.p_init > 0 ? sched.p_init : ceil_div(n, 3);
      r.p_min = sched.p_min > 0 ? sched.p_min : ceil_div(n, 4);
      r.p_max = sched.p_max > 0 ? sched.p_max : ceil_div(n, 2);
      r.p_diff = sched.p_diff > 0 ? sched.p_diff : ceil_div(n, 10);
      if (!(1 <= r.p_min && r.p_min <= r.p_init && r.p_init <= r.p_max))
        throw std::invalid_argument("p schedule: need 1 <= p_min <= p_init <= p_max");
      break;
  }
  return r;
}

void SolverConfig::validate() const {
  if (!(0.0 < eta0 && eta0 < 1.0)) throw std::invalid_argument("config: need 0 < eta0 < 1");
  if (!(0.0 < eta1 && eta1 < eta2)) throw std::invalid_argument("config: need 0 < eta1 < eta2");
  if (!(0.0 < gamma1 && gamma1 < 1.0 && 1.0 < gamma2))
    throw std::invalid_argument("config: need 0 < gamma1 < 1 < gamma2");
  if (!(theta0 >= theta_min && theta_min > 0.0))
    throw std::invalid_argument("config: need theta0 >= theta_min > 0");
  if (!(epsilon0 > 0.0)) throw std::invalid_argument("config: need epsilon0 > 0");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("config: need sigma0 > 0");
  if (!(0.0 < sigma_lo && sigma_lo <= sigma_hi))
    throw std::invalid_argument("config: need 0 < sigma_lo <= sigma_hi");
  if (!(step_tol > 0.0 && rel_decrease_tol > 0.0))
    throw std::invalid_argument("config: stopping tolerances must be positive");
  if (max_fevals < 0) throw std::invalid_argument("config: max_fevals must be >= 0");
  if (mode == ModelMode::Denoising && denoise_xi <= 0.0 && lipschitz_estimate <= 0.0)
    throw std::invalid_argument("config: denoising mode needs denoise_xi or lipschitz_estimate");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::StationaryModelGradient: return "stationary_model_gradient";
    case StopReason::SmallStep: return "small_step";
    case StopReason::SmallRelativeDecrease: return "small_relative_decrease";
    case StopReason::MaxFevals: return "max_fevals";
    case StopReason::Error: return "error";
  }
  return "unknown";
}

std::pair<VectorXd, double> lm_step(const MatrixXd& J_m, const VectorXd& F_k, double theta_k,
                                    int* retries) {
  const Eigen::Index n = J_m.cols();
  VectorXd g = J_m.transpose() * F_k;
  const double gnorm = g.norm();
  if (!(gnorm > 0.0)) throw std::invalid_argument("lm_step: J^T F must be nonzero");

  MatrixXd N(n, n);
  N.setZero();
  N.selfadjointView<Eigen::Lower>().rankUpdate(J_m.transpose());
  N = N.selfadjointView<Eigen::Lower>();

  auto attempt = [&](double lambda, VectorXd& d, double& relres) {
    MatrixXd H = N;
    H.diagonal().array() += lambda;
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      Eigen::LDLT<MatrixXd> ldlt(H);
      d = ldlt.solve(-g);
    } else {
      d = llt.solve(-g);
    }
    // one refinement pass keeps the relative residual at the 1e-10 contract
    for (int t = 0; t < 2; ++t) {
      VectorXd r = -g - H * d;
      relres = r.norm() / gnorm;
      if (relres <= 1e-10 || !d.allFinite()) break;
      if (llt.info() == Eigen::Success)
        d += llt.solve(r);
      else
        break;
    }
    return d.allFinite();
  };

  double lambda = theta_k * gnorm;
  VectorXd d;
  double relres = kInf;
  bool ok = attempt(lambda, d, relres);
  if (!ok || relres > 1e-10) {
    if (retries) ++(*retries);
    double lambda2 = lambda * 10.0;
    VectorXd d2;
    double relres2 = kInf;
    bool ok2 = attempt(lambda2, d2, relres2);
    if (ok2 && (!ok || relres2 < relres)) {
      d = std::move(d2);
      lambda = lambda2;
    }
  }
  return {std::move(d), lambda};
}

std::pair<double, double> ratio_with_pred(const VectorXd& F_k, const VectorXd& F_trial,
                                          const MatrixXd& J_m, const VectorXd& d_k) {
  const double fk2 = F_k.squaredNorm();
  const double pred = fk2 - (F_k + J_m * d_k).squaredNorm();
  if (!(pred > 0.0)) return {-kInf, pred};  // exact arithmetic guarantees pred > 0
  const double ared = fk2 - F_trial.squaredNorm();
  return {ared / pred, pred};
}

double ratio(const VectorXd& F_k, const VectorXd& F_trial, const MatrixXd& J_m,
             const VectorXd& d_k) {
  return ratio_with_pred(F_k, F_trial, J_m, d_k).first;
}

double update_theta(double theta_k, double rho_k, double grad_model_norm,
                    const SolverConfig& cfg) {
  if (rho_k < cfg.eta0) return cfg.gamma2 * theta_k;
  if (grad_model_norm < cfg.eta1 / theta_k) return cfg.gamma2 * theta_k;
  if (grad_model_norm <= cfg.eta2 / theta_k) return theta_k;
  return std::max(cfg.gamma1 * theta_k, cfg.theta_min);
}

double update_sigma(double d_prev_norm, const SolverConfig& cfg) {
  if (cfg.sigma_theory_mode) return d_prev_norm;
  return std::clamp(d_prev_norm, cfg.sigma_lo, cfg.sigma_hi);
}

int update_p(int p, bool accepted, const ResolvedPSchedule& sched) {
  if (!sched.adaptive) return p;
  int moved = accepted ? p + sched.p_diff : p - sched.p_diff;
  return std::clamp(moved, sched.p_min, sched.p_max);
}

namespace {

RunRecord run_lm_loop(const Problem& problem, const SolverConfig& cfg, bool fd_baseline) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const int n = problem.n;

  RunRecord rec;
  rec.solver_id = fd_baseline ? "fd-lm" : "dflm";
  rec.problem_id = problem.name;
  rec.seed = cfg.seed;
  rec.n = n;
  rec.m = problem.m;
  rec.budget = cfg.max_fevals > 0 ? cfg.max_fevals : 1000L * (n + 1);
  rec.config = cfg;

  const ResolvedPSchedule sched = resolve(cfg.p_schedule, n);

  long fevals = 0;
  double best_f = kInf;
  VectorXd x = problem.initial_point;

  try {
    VectorXd F = problem.eval(x);
    fevals = 1;
    if (!F.allFinite()) throw NonFiniteResidualError("non-finite residual at initial point", -1);
    double f = 0.5 * F.squaredNorm();
    rec.f0 = f;
    best_f = f;
    rec.trace.push_back({fevals, best_f});

    double theta = cfg.theta0;
    double sigma = cfg.sigma0;
    int p = sched.p_init;
    double d_prev_norm = 0.0;

    for (int k = 0;; ++k) {
      if (fevals >= rec.budget) {
        rec.stop = StopReason::MaxFevals;
        break;
      }
      if (k > 0) sigma = update_sigma(d_prev_norm, cfg);

      MatrixXd J;
      int p_used = 0;
      if (fd_baseline) {
        J = forward_difference_jacobian(problem, x, F, kFdStep);
        fevals += n;
        p_used = n;
        if (!J.allFinite())
          throw NonFiniteResidualError("non-finite residual during finite differencing", -1);
      } else {
        SensingMatrix A =
            generate(p, n, cfg.distribution, mix_seed(cfg.seed, static_cast<std::uint64_t>(k)));
        InterpolationSet set = build_interpolation_set(problem, x, F, sigma, A);
        fevals += set.fevals_used;
        double xi = 0.0;
        if (cfg.mode == ModelMode::Denoising) {
          double kbv = A.max_row_norm();
          xi = cfg.lipschitz_estimate > 0.0
                   ? 0.5 * std::sqrt(static_cast<double>(p)) * cfg.lipschitz_estimate * kbv * kbv *
                         sigma
                   : cfg.denoise_xi;
        }
        JacobianModel model = assemble_jacobian(set, cfg.mode, xi, cfg.recovery);
        J = std::move(model.J);
        p_used = p;
      }

      VectorXd g = J.transpose() * F;
      const double gnorm = g.norm();

      IterationRecord it;
      it.k = k;
      it.f = f;
      it.grad_model_norm = gnorm;
      it.theta = theta;
      it.p = p_used;
      if (cfg.check_invariants) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(J.transpose() * J, Eigen::EigenvaluesOnly);
        it.gram_norm = es.eigenvalues().maxCoeff();
      }

      if (gnorm <= cfg.epsilon0) {
        it.fevals = fevals;
        it.has_step = false;
        it.lambda = kNan;
        it.rho = kNan;
        it.step_norm = 0.0;
        it.accepted = false;
        it.pred = kNan;
        it.f_trial = kNan;
        rec.history.push_back(it);
        rec.trace.push_back({fevals, best_f});
        rec.stop = StopReason::StationaryModelGradient;
        break;
      }

      auto [d, lambda] = lm_step(J, F, theta, &rec.lm_retries);
      const double dnorm = d.norm();

      VectorXd x_trial = x + d;
      VectorXd F_trial = problem.eval(x_trial);
      ++fevals;
      if (!F_trial.allFinite())
        throw NonFiniteResidualError("non-finite residual at trial point", -1);
      const double f_trial = 0.5 * F_trial.squaredNorm();

      auto [rho, pred] = ratio_with_pred(F, F_trial, J, d);
      const bool accepted = rho > cfg.eta0;

      it.fevals = fevals;
      it.lambda = lambda;
      it.rho = rho;
      it.step_norm = dnorm;
      it.accepted = accepted;
      it.pred = pred;
      it.f_trial = f_trial;
      rec.history.push_back(it);

      // |  ||F_k||^2 - ||F(x_k+d_k)||^2 | / (||F_k||^2 + 1e-8), trial point
      // included whether or not the step is accepted
      const double rel_decrease = std::abs(2.0 * f - 2.0 * f_trial) / (2.0 * f + 1e-8);

      theta = update_theta(theta, rho, gnorm, cfg);
      d_prev_norm = dnorm;
      p = update_p(p, accepted, sched);
      if (accepted) {
        x.swap(x_trial);
        F.swap(F_trial);
        f = f_trial;
      }
      best_f = std::min(best_f, f_trial);
      rec.trace.push_back({fevals, best_f});

      if (dnorm <= cfg.step_tol) {
        rec.stop = StopReason::SmallStep;
        break;
      }
      if (rel_decrease <= cfg.rel_decrease_tol) {
        rec.stop = StopReason::SmallRelativeDecrease;
        break;
      }
    }
  } catch (const std::exception& e) {
    rec.stop = StopReason::Error;
    rec.stop_detail = e.what();
  }

  rec.fevals = fevals;
  rec.final_f = best_f;
  rec.x_final = x;
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rec;
}

}  // namespace

RunRecord solve(const Problem& problem, const SolverConfig& cfg) {
  return run_lm_loop(problem, cfg, false);
}

RunRecord solve_fd_baseline(const Problem& problem, const SolverConfig& cfg) {
  return run_lm_loop(problem, cfg, true);
}

}  // namespace dflm
