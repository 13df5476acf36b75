#include "dflm/sparse_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dflm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(RecoveryStatus s) {
  switch (s) {
    case RecoveryStatus::Optimal: return "optimal";
    case RecoveryStatus::MaxIterations: return "max_iterations";
    case RecoveryStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct BpSharedContext {
  Eigen::LLT<MatrixXd> llt_aat2;  // factor of 2 A A^T, used for the start point
  bool valid = false;
};

std::shared_ptr<BpSharedContext> make_bp_context(const MatrixXd& A) {
  auto ctx = std::make_shared<BpSharedContext>();
  MatrixXd aat2 = 2.0 * (A * A.transpose());
  ctx->llt_aat2.compute(aat2);
  ctx->valid = (ctx->llt_aat2.info() == Eigen::Success);
  return ctx;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct IpmOutcome {
  VectorXd g;
  int iterations = 0;
  double pinf = kInf;   // ||A g - b|| / (1 + ||b||)
  double dinf = kInf;
  double relgap = kInf;
  bool hit_targets = false;
  bool rank_deficient = false;  // normal matrix singular at the first iterate
};

// Largest alpha in (0, 1] keeping v + alpha*dv >= 0 componentwise.
double max_step(const VectorXd& v1, const VectorXd& dv1, const VectorXd& v2,
                const VectorXd& dv2) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v1.size(); ++i)
    if (dv1[i] < 0.0) a = std::min(a, -v1[i] / dv1[i]);
  for (Eigen::Index i = 0; i < v2.size(); ++i)
    if (dv2[i] < 0.0) a = std::min(a, -v2[i] / dv2[i]);
  return a;
}

// Mehrotra predictor-corrector on  min 1^T(x+ + x-)  s.t.  A(x+ - x-) = b,
// x >= 0. The normal matrix is A diag(x+/s+ + x-/s-) A^T (p x p).
IpmOutcome bp_interior_point(const MatrixXd& A, const VectorXd& b, double target_feas,
                             double target_gap, int max_iter,
                             const BpSharedContext* shared) {
  const Eigen::Index p = A.rows();
  const Eigen::Index n = A.cols();
  const double bnorm = b.norm();
  const double dual_scale = 1.0 + std::sqrt(2.0 * static_cast<double>(n));

  IpmOutcome out;

  // Start point: min-norm solve of the equality constraint, then the usual
  // shift into the positive orthant.
  VectorXd z(p);
  if (shared && shared->valid) {
    z = shared->llt_aat2.solve(b);
  } else {
    MatrixXd aat2 = 2.0 * (A * A.transpose());
    Eigen::LDLT<MatrixXd> ldlt(aat2);
    z = ldlt.solve(b);
    if (!z.allFinite()) z.setZero();
  }
  VectorXd u = A.transpose() * z;
  VectorXd xp = u, xm = -u;
  double shift = std::max({0.0, -1.5 * xp.minCoeff(), -1.5 * xm.minCoeff()});
  xp.array() += shift;
  xm.array() += shift;
  VectorXd sp = VectorXd::Ones(n), sm = VectorXd::Ones(n);
  double xs = xp.dot(sp) + xm.dot(sm);
  if (xs <= 0.0) {
    xp.setOnes();
    xm.setOnes();
    xs = 2.0 * static_cast<double>(n);
  }
  double dx = 0.5 * xs / (sp.sum() + sm.sum());
  double ds = 0.5 * xs / (xp.sum() + xm.sum());
  xp.array() += dx;
  xm.array() += dx;
  sp.array() += ds;
  sm.array() += ds;
  VectorXd y = VectorXd::Zero(p);

  MatrixXd M(p, p), As(p, n);
  VectorXd best_g;
  double best_metric = kInf;
  int stall = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    VectorXd Aty = A.transpose() * y;
    VectorXd rb = A * (xp - xm) - b;
    VectorXd rcp = Aty + sp - VectorXd::Ones(n);
    VectorXd rcm = -Aty + sm - VectorXd::Ones(n);
    double mu = (xp.dot(sp) + xm.dot(sm)) / (2.0 * static_cast<double>(n));

    double pinf = rb.norm() / (1.0 + bnorm);
    double dinf = std::sqrt(rcp.squaredNorm() + rcm.squaredNorm()) / dual_scale;
    double pobj = xp.sum() + xm.sum();
    double dobj = b.dot(y);
    double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

    double metric = std::max({pinf, dinf, relgap});
    out.iterations = iter;
    if (metric < best_metric) {
      bool significant = metric < 0.95 * best_metric;
      best_metric = metric;
      best_g = xp - xm;
      out.pinf = pinf;
      out.dinf = dinf;
      out.relgap = relgap;
      stall = significant ? 0 : stall + 1;
    } else {
      ++stall;
    }
    if (pinf <= target_feas && dinf <= target_feas && relgap <= target_gap) {
      best_g = xp - xm;
      out.pinf = pinf;
      out.dinf = dinf;
      out.relgap = relgap;
      out.hit_targets = true;
      break;
    }
    if (stall >= 10) break;
    if (mu < 1e-18 && pinf <= target_feas) break;

    VectorXd dp = xp.cwiseQuotient(sp);
    VectorXd dm = xm.cwiseQuotient(sm);
    VectorXd w = dp + dm;
    As.noalias() = A * w.cwiseSqrt().asDiagonal();
    M.setZero();
    M.selfadjointView<Eigen::Lower>().rankUpdate(As);

    Eigen::LLT<MatrixXd> llt(M);  // reads the lower triangle only
    if (llt.info() != Eigen::Success) {
      if (iter == 0) out.rank_deficient = true;  // singular normal matrix => A row-rank-deficient
      double jitter = 1e-13 * (1.0 + M.trace());
      for (int t = 0; t < 3 && llt.info() != Eigen::Success; ++t) {
        M.diagonal().array() += jitter;
        llt.compute(M);
        jitter *= 100.0;
      }
      if (llt.info() != Eigen::Success) break;
    }

    // predictor (affine scaling)
    VectorXd vp = xp - dp.cwiseProduct(rcp);
    VectorXd vm = xm - dm.cwiseProduct(rcm);
    VectorXd rhs = -rb + A * (vp - vm);
    VectorXd dy = llt.solve(rhs);
    VectorXd Atdy = A.transpose() * dy;
    VectorXd dsp = -rcp - Atdy;
    VectorXd dsm = -rcm + Atdy;
    VectorXd dxp = -xp - dp.cwiseProduct(dsp);
    VectorXd dxm = -xm - dm.cwiseProduct(dsm);

    double ap = max_step(xp, dxp, xm, dxm);
    double ad = max_step(sp, dsp, sm, dsm);
    double mu_aff = ((xp + ap * dxp).dot(sp + ad * dsp) + (xm + ap * dxm).dot(sm + ad * dsm)) /
                    (2.0 * static_cast<double>(n));
    double sg = mu_aff / mu;
    double sigma = sg * sg * sg;

    // corrector with centering
    VectorXd cxp = xp + (dxp.cwiseProduct(dsp).array() - sigma * mu).matrix().cwiseQuotient(sp);
    VectorXd cxm = xm + (dxm.cwiseProduct(dsm).array() - sigma * mu).matrix().cwiseQuotient(sm);
    vp = cxp - dp.cwiseProduct(rcp);
    vm = cxm - dm.cwiseProduct(rcm);
    rhs = -rb + A * (vp - vm);
    dy = llt.solve(rhs);
    Atdy.noalias() = A.transpose() * dy;
    dsp = -rcp - Atdy;
    dsm = -rcm + Atdy;
    dxp = -cxp - dp.cwiseProduct(dsp);
    dxm = -cxm - dm.cwiseProduct(dsm);

    ap = std::min(1.0, 0.995 * max_step(xp, dxp, xm, dxm));
    ad = std::min(1.0, 0.995 * max_step(sp, dsp, sm, dsm));
    xp += ap * dxp;
    xm += ap * dxm;
    y += ad * dy;
    sp += ad * dsp;
    sm += ad * dsm;
  }

  out.g = best_g.size() ? best_g : VectorXd::Zero(n);
  return out;
}

// Indices of a maximal linearly independent row subset (pivoted QR of A^T).
std::vector<int> independent_rows(const MatrixXd& A) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  int rank = static_cast<int>(qr.rank());
  auto perm = qr.colsPermutation().indices();
  std::vector<int> rows(rank);
  for (int i = 0; i < rank; ++i) rows[i] = perm[i];
  std::sort(rows.begin(), rows.end());
  return rows;
}

RecoveryResult finish(const MatrixXd& A, const VectorXd& b, VectorXd g,
                      RecoveryStatus status, int iterations) {
  RecoveryResult r;
  r.residual_norm = (A * g - b).norm();
  r.l1_norm = g.lpNorm<1>();
  r.g = std::move(g);
  r.status = status;
  r.iterations = iterations;
  return r;
}

}  // namespace

RecoveryResult bp_solve(const RecoveryProblem& prob, const RecoveryOptions& opts,
                        const BpSharedContext* shared) {
  const MatrixXd& A = prob.A;
  const VectorXd& b = prob.b;
  if (A.rows() != b.size()) throw std::invalid_argument("bp_solve: rows(A) != len(b)");

  if (b.norm() == 0.0)
    return finish(A, b, VectorXd::Zero(A.cols()), RecoveryStatus::Optimal, 0);

  const double target_feas = 0.02 * opts.feasibility_tol;
  const double target_gap = 0.02 * opts.optimality_tol;
  const int cap = std::min(opts.max_iterations, 200);

  IpmOutcome out = bp_interior_point(A, b, target_feas, target_gap, cap, shared);

  if (out.rank_deficient && !out.hit_targets) {
    // Rank-deficient A: either b is outside range(A) (infeasible) or the
    // redundant rows can be dropped and the LP re-run on the reduced system.
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    VectorXd gls = cod.solve(b);
    double res = (A * gls - b).norm();
    if (res > opts.feasibility_tol * (1.0 + b.norm()))
      return finish(A, b, gls, RecoveryStatus::Infeasible, out.iterations);
    std::vector<int> rows = independent_rows(A);
    MatrixXd Ar(rows.size(), A.cols());
    VectorXd br(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      Ar.row(static_cast<Eigen::Index>(i)) = A.row(rows[i]);
      br[static_cast<Eigen::Index>(i)] = b[rows[i]];
    }
    IpmOutcome red = bp_interior_point(Ar, br, target_feas, target_gap, cap, nullptr);
    red.iterations += out.iterations;
    out = std::move(red);
  }

  RecoveryResult r = finish(A, b, out.g, RecoveryStatus::Optimal, out.iterations);
  bool feas = r.residual_norm <= opts.feasibility_tol * (1.0 + b.norm());
  bool certified = out.dinf <= opts.feasibility_tol && out.relgap <= opts.optimality_tol;
  if (feas && certified) return r;

  // Not certified: distinguish an inconsistent system from slow convergence.
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  VectorXd gls = cod.solve(b);
  if ((A * gls - b).norm() > opts.feasibility_tol * (1.0 + b.norm()))
    return finish(A, b, gls, RecoveryStatus::Infeasible, out.iterations);
  r.status = RecoveryStatus::MaxIterations;
  return r;
}

namespace {

// Projection onto {z : ||A z - b|| <= xi} via the thin SVD of A. The secular
// parameter mu solves sum_i w_i^2/(1+mu s_i^2)^2 + ||perp||^2 = xi^2.
struct BallPreimageProjector {
  MatrixXd Ur;   // p x r
  MatrixXd B;    // A^T Ur, n x r
  VectorXd sig;  // r singular values above threshold
  const MatrixXd* A = nullptr;
  const VectorXd* b = nullptr;
  double xi = 0.0;

  void init(const MatrixXd& A_, const VectorXd& b_, double xi_) {
    A = &A_;
    b = &b_;
    xi = xi_;
    Eigen::JacobiSVD<MatrixXd> svd(A_, Eigen::ComputeThinU);
    double thresh = svd.singularValues()(0) * std::max(A_.rows(), A_.cols()) *
                    std::numeric_limits<double>::epsilon();
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > thresh) ++r;
    Ur = svd.matrixU().leftCols(r);
    sig = svd.singularValues().head(r);
    B = A_.transpose() * Ur;
  }

  // Distance from b to range(A); the infeasibility floor of the constraint.
  double min_residual() const {
    VectorXd w = Ur.transpose() * (*b);
    double perp2 = std::max(0.0, b->squaredNorm() - w.squaredNorm());
    return std::sqrt(perp2);
  }

  VectorXd project(const VectorXd& v) const {
    VectorXd rv = (*A) * v - (*b);
    double rn = rv.norm();
    if (rn <= xi) return v;
    VectorXd w = Ur.transpose() * rv;
    double perp2 = std::max(0.0, rv.squaredNorm() - w.squaredNorm());
    VectorXd s2 = sig.array().square();

    auto phi = [&](double mu) {
      double acc = perp2;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        double d = 1.0 + mu * s2[i];
        acc += (w[i] * w[i]) / (d * d);
      }
      return acc;
    };

    const double xi2 = xi * xi;
    double lo = 0.0, hi = 1.0;
    while (phi(hi) > xi2 && hi < 1e30) hi *= 4.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (phi(mid) > xi2 ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    VectorXd coef = (mu * w.array() / (1.0 + mu * s2.array())).matrix();
    return v - B * coef;
  }
};

double soft_threshold(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

// Dual bound b^T y - xi ||y|| over ||A^T y||_inf <= 1, maximized along the
// residual direction b - A z (collinear with the optimal dual).
double bpdn_dual_bound(const MatrixXd& A, const VectorXd& b, double xi, const VectorXd& z) {
  VectorXd dir = b - A * z;
  double nd = (A.transpose() * dir).lpNorm<Eigen::Infinity>();
  if (nd <= 0.0) return 0.0;
  return (b.dot(dir) - xi * dir.norm()) / nd;
}

}  // namespace

RecoveryResult bpdn_solve(const RecoveryProblem& prob, const RecoveryOptions& opts) {
  const MatrixXd& A = prob.A;
  const VectorXd& b = prob.b;
  const double xi = prob.xi;
  if (A.rows() != b.size()) throw std::invalid_argument("bpdn_solve: rows(A) != len(b)");
  if (xi <= 0.0) throw std::invalid_argument("bpdn_solve: xi must be positive");

  // zero is feasible and has minimal l1 norm
  if (b.norm() <= xi) return finish(A, b, VectorXd::Zero(A.cols()), RecoveryStatus::Optimal, 0);

  BallPreimageProjector proj;
  proj.init(A, b, xi);
  if (proj.min_residual() > xi * (1.0 + opts.feasibility_tol))
    return finish(A, b, VectorXd::Zero(A.cols()), RecoveryStatus::Infeasible, 0);

  const Eigen::Index n = A.cols();
  double rho = 1.0;
  VectorXd z = proj.project(VectorXd::Zero(n));
  VectorXd g = z;
  VectorXd u = VectorXd::Zero(n);

  VectorXd best_z = z;
  double best_l1 = z.lpNorm<1>();
  double best_gap = kInf;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) g[i] = soft_threshold(z[i] - u[i], 1.0 / rho);
    VectorXd z_old = z;
    z = proj.project(g + u);
    u += g - z;

    double rpri = (g - z).norm();
    double rdua = rho * (z - z_old).norm();

    // every z is feasible, so tracking the smallest l1 iterate is safe
    double l1 = z.lpNorm<1>();
    if (l1 < best_l1) {
      best_l1 = l1;
      best_z = z;
      best_gap = kInf;  // recertify below
    }

    if (iter % 10 == 9 || (rpri < 1e-12 && rdua < 1e-12)) {
      double dual = bpdn_dual_bound(A, b, xi, best_z);
      best_gap = best_l1 - dual;
      if (best_gap <= opts.optimality_tol * (1.0 + best_l1)) {
        ++iter;
        break;
      }
    }

    if (rpri > 10.0 * rdua && rho < 1e8) {
      rho *= 2.0;
      u *= 0.5;
    } else if (rdua > 10.0 * rpri && rho > 1e-8) {
      rho *= 0.5;
      u *= 2.0;
    }
  }

  if (best_gap == kInf) best_gap = best_l1 - bpdn_dual_bound(A, b, xi, best_z);
  RecoveryStatus st = best_gap <= opts.optimality_tol * (1.0 + best_l1)
                          ? RecoveryStatus::Optimal
                          : RecoveryStatus::MaxIterations;
  return finish(A, b, best_z, st, iter);
}

RecoveryResult brute_force_oracle(const RecoveryProblem& prob, int s_max,
                                  std::uint64_t max_subsets) {
  const MatrixXd& A = prob.A;
  const VectorXd& b = prob.b;
  const int n = static_cast<int>(A.cols());
  if (A.rows() != b.size()) throw std::invalid_argument("oracle: rows(A) != len(b)");
  if (s_max < 0 || s_max > n) throw std::invalid_argument("oracle: need 0 <= s_max <= n");

  long double total = 1.0L;  // empty support
  long double c = 1.0L;
  for (int k = 1; k <= s_max; ++k) {
    c = c * static_cast<long double>(n - k + 1) / static_cast<long double>(k);
    total += c;
    if (total > static_cast<long double>(max_subsets) * 2.0L) break;
  }
  if (total > static_cast<long double>(max_subsets))
    throw std::invalid_argument("instance too large for brute force");

  const double feas_slack = 1e-8 * (1.0 + b.norm());
  double best_l1 = kInf;
  VectorXd best_g;
  int examined = 0;

  auto consider = [&](const VectorXd& g) {
    double res = (A * g - b).norm();
    if (res > prob.xi + feas_slack) return;
    double l1 = g.lpNorm<1>();
    if (l1 < best_l1) {
      best_l1 = l1;
      best_g = g;
    }
  };

  consider(VectorXd::Zero(n));
  ++examined;

  std::vector<int> idx;
  for (int k = 1; k <= s_max; ++k) {
    idx.resize(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    MatrixXd B(A.rows(), k);
    for (;;) {
      for (int j = 0; j < k; ++j) B.col(j) = A.col(idx[j]);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
      VectorXd coef = qr.solve(b);
      VectorXd g = VectorXd::Zero(n);
      for (int j = 0; j < k; ++j) g[idx[j]] = coef[j];
      consider(g);
      ++examined;

      int i = k - 1;
      while (i >= 0 && idx[i] == n - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }

  if (!best_g.size())
    return finish(A, b, VectorXd::Zero(n), RecoveryStatus::Infeasible, examined);
  return finish(A, b, best_g, RecoveryStatus::Optimal, examined);
}

}  // namespace dflm
