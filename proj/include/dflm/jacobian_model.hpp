#pragma once

#include "dflm/problems.hpp"
#include "dflm/sensing.hpp"
#include "dflm/sparse_recovery.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace dflm {

/// Residual values at the p interpolation points x_k + sigma_k * v^j.
/// F_base is caller-supplied so a model build costs exactly p evaluations.
struct InterpolationSet {
  Eigen::VectorXd x_k;
  double sigma_k = 0.0;
  SensingMatrix A;
  Eigen::VectorXd F_base;     // F(x_k), reused from solver state
  Eigen::MatrixXd F_shifted;  // p x m, row j = F(x_k + sigma_k * v^j)^T
  int fevals_used = 0;        // always p
};

/// Raised when a residual evaluation returns NaN/Inf. point_index is the
/// offending interpolation point (or -1 for a non-probe evaluation).
class NonFiniteResidualError : public std::runtime_error {
 public:
  NonFiniteResidualError(const std::string& what, int point_index)
      : std::runtime_error(what), point_index(point_index) {}
  int point_index;
};

/// Raised when a row recovery comes back Infeasible.
class RowRecoveryError : public std::runtime_error {
 public:
  RowRecoveryError(const std::string& what, int row) : std::runtime_error(what), row(row) {}
  int row;
};

enum class ModelMode { Noiseless, Denoising };

/// The m x n model Jacobian with row i the recovered gradient of F^(i).
struct JacobianModel {
  Eigen::MatrixXd J;
  std::vector<RecoveryStatus> row_status;  // Optimal or MaxIterations only
  double sigma_k = 0.0;
  double xi_k = 0.0;  // 0 in noiseless mode
};

/// Evaluates F at the p shifted points (exactly once each) and assembles the
/// interpolation data. Throws NonFiniteResidualError on a bad point.
InterpolationSet build_interpolation_set(const Problem& problem, const Eigen::VectorXd& x_k,
                                         const Eigen::VectorXd& F_base, double sigma_k,
                                         const SensingMatrix& A);

/// Runs the m row recoveries against the shared sensing matrix: basis pursuit
/// in Noiseless mode, the xi_k-relaxed variant in Denoising mode. Throws
/// RowRecoveryError if any row is infeasible.
JacobianModel assemble_jacobian(const InterpolationSet& set, ModelMode mode, double xi_k = 0.0,
                                const RecoveryOptions& opts = {});

}  // namespace dflm
