#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>

namespace dflm {

/// One l1 recovery instance: min ||g||_1 subject to ||A g - b|| <= xi.
/// xi = 0 is the equality-constrained (basis pursuit) case.
struct RecoveryProblem {
  Eigen::MatrixXd A;  // p x n
  Eigen::VectorXd b;  // p, already scaled by 1/sigma
  double xi = 0.0;
};

enum class RecoveryStatus { Optimal, MaxIterations, Infeasible };

std::string to_string(RecoveryStatus s);

struct RecoveryResult {
  Eigen::VectorXd g;
  double l1_norm = 0.0;
  double residual_norm = 0.0;  // ||A g - b||
  RecoveryStatus status = RecoveryStatus::Optimal;
  int iterations = 0;
};

struct RecoveryOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-8;
  int max_iterations = 10000;
};

/// Shared per-matrix precomputation for solving many right-hand sides against
/// one A (the m row problems of a Jacobian build). Optional; results are
/// identical with or without it.
struct BpSharedContext;
std::shared_ptr<BpSharedContext> make_bp_context(const Eigen::MatrixXd& A);

/// Basis pursuit: min ||g||_1 s.t. A g = b, solved as the split LP
/// min 1^T (g+ + g-) s.t. A(g+ - g-) = b, g+- >= 0 with a Mehrotra-style
/// primal-dual interior-point method on the normal equations.
///
/// Optimality is certified by the LP duality gap; feasibility means
/// ||A g - b|| <= feasibility_tol * (1 + ||b||). Returns Infeasible only when
/// A is row-rank-deficient and b is outside range(A) within tolerance.
RecoveryResult bp_solve(const RecoveryProblem& prob, const RecoveryOptions& opts = {},
                        const BpSharedContext* shared = nullptr);

/// Basis pursuit denoising (xi > 0), solved by operator splitting (ADMM) with
/// an exact ball-preimage projection from one SVD of A. The returned iterate
/// satisfies ||A g - b|| <= xi * (1 + feasibility_tol); optimality is
/// certified against the dual max b^T y - xi ||y|| s.t. ||A^T y||_inf <= 1.
RecoveryResult bpdn_solve(const RecoveryProblem& prob, const RecoveryOptions& opts = {});

/// Test oracle: enumerates every support S with |S| <= s_max, takes the
/// least-squares solution restricted to S, and returns the feasible one
/// (residual <= xi, within tolerance) of least l1 norm. Infeasible when no
/// support qualifies. Throws std::invalid_argument beyond max_subsets.
RecoveryResult brute_force_oracle(const RecoveryProblem& prob, int s_max,
                                  std::uint64_t max_subsets = 1000000);

}  // namespace dflm
