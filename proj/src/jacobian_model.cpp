#include "dflm/jacobian_model.hpp"

namespace dflm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

InterpolationSet build_interpolation_set(const Problem& problem, const VectorXd& x_k,
                                         const VectorXd& F_base, double sigma_k,
                                         const SensingMatrix& A) {
  if (sigma_k <= 0.0) throw std::invalid_argument("build_interpolation_set: sigma_k must be positive");
  if (A.n != problem.n) throw std::invalid_argument("build_interpolation_set: dimension mismatch");
  if (F_base.size() != problem.m)
    throw std::invalid_argument("build_interpolation_set: F_base has wrong dimension");

  InterpolationSet set;
  set.x_k = x_k;
  set.sigma_k = sigma_k;
  set.A = A;
  set.F_base = F_base;
  set.F_shifted.resize(A.p, problem.m);
  for (int j = 0; j < A.p; ++j) {
    VectorXd point = x_k + sigma_k * A.entries.row(j).transpose();
    VectorXd Fj = problem.eval(point);
    if (!Fj.allFinite())
      throw NonFiniteResidualError("non-finite residual at interpolation point " + std::to_string(j), j);
    set.F_shifted.row(j) = Fj.transpose();
  }
  set.fevals_used = A.p;
  return set;
}

JacobianModel assemble_jacobian(const InterpolationSet& set, ModelMode mode, double xi_k,
                                const RecoveryOptions& opts) {
  const int m = static_cast<int>(set.F_base.size());
  const int n = set.A.n;
  if (mode == ModelMode::Denoising && xi_k <= 0.0)
    throw std::invalid_argument("assemble_jacobian: denoising mode requires xi_k > 0");

  JacobianModel model;
  model.J.resize(m, n);
  model.row_status.resize(m);
  model.sigma_k = set.sigma_k;
  model.xi_k = mode == ModelMode::Denoising ? xi_k : 0.0;

  auto shared = make_bp_context(set.A.entries);
  const double inv_sigma = 1.0 / set.sigma_k;

  RecoveryProblem row;
  row.A = set.A.entries;
  row.xi = model.xi_k;
  for (int i = 0; i < m; ++i) {
    row.b = inv_sigma * (set.F_shifted.col(i).array() - set.F_base[i]).matrix();
    RecoveryResult res = mode == ModelMode::Noiseless ? bp_solve(row, opts, shared.get())
                                                      : bpdn_solve(row, opts);
    if (res.status == RecoveryStatus::Infeasible)
      throw RowRecoveryError("row recovery infeasible at row " + std::to_string(i), i);
    model.J.row(i) = res.g.transpose();
    model.row_status[i] = res.status;
  }
  return model;
}

}  // namespace dflm
