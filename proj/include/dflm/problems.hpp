#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace dflm {

/// A black-box residual map F: R^n -> R^m with metadata. The analytic
/// Jacobian, when present, is for offline validation only; solvers never
/// read it.
struct Problem {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  Eigen::VectorXd initial_point;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> analytic_jacobian;  // may be empty
  int row_sparsity = 0;  // max nonzeros per Jacobian row; 0 = undeclared
  bool eval_thread_safe = true;

  double f(const Eigen::VectorXd& x) const { return 0.5 * eval(x).squaredNorm(); }
};

/// F_i = (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1, x_0 = x_{n+1} = 0,
/// started at (-1, ..., -1). Tridiagonal Jacobian, 3 nonzeros per row.
Problem broyden_tridiagonal(int n);

/// Three-residual blocks mixing a cubic-exponential valley with sin/cos
/// couplings; n must be a multiple of 3, started at (-4, 1, 2, ...).
Problem tridimensional_valley(int n);

/// Pairwise Freudenstein-Roth residuals; n must be even, started at
/// (90, 60, 90, 60, ...).
Problem extended_freudenstein_roth(int n);

/// Block trigonometric system with blocks of five variables; n must be a
/// multiple of 5, started at (1/n, 2/n, ..., 1).
Problem trigonometric_system(int n);

/// Forward-difference Jacobian with the fixed absolute step used by the
/// finite-difference baseline (n extra residual evaluations). The overload
/// taking F0 = F(x) skips the base evaluation.
Eigen::MatrixXd forward_difference_jacobian(const Problem& p, const Eigen::VectorXd& x,
                                            double step = 1.5e-8);
Eigen::MatrixXd forward_difference_jacobian(const Problem& p, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& F0, double step);

/// Registration invariants: F(x0) finite; when an analytic Jacobian is
/// declared it must agree with forward differences to 1e-5 max-norm at x0 and
/// respect the declared row sparsity there. Throws std::invalid_argument.
void check_problem(const Problem& p);

/// Name -> problem lookup shared by the CLI and the benchmark driver.
/// Families are size-parameterized factories; fixed problems are registered
/// as-is (and validated). Registration is serialized, reads are concurrent.
class ProblemRegistry {
 public:
  using Factory = std::function<Problem(int)>;

  void add_family(const std::string& name, Factory make);
  void add(Problem p);  // fixed-size; runs check_problem
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Builds `name` at dimension n. Fixed problems require n == 0 or their own
  /// n; families validate n themselves (divisibility etc.).
  Problem make(const std::string& name, int n) const;

 private:
  struct Entry {
    Factory factory;
    int fixed_n = 0;  // 0 = family
  };
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

/// Registry preloaded with the four built-in families:
/// broyden, valley, freudenstein, trigonometric.
ProblemRegistry& builtin_registry();

/// Smallest valid dimension >= n for a built-in family name (rounds up to the
/// family's divisibility constraint).
int nearest_valid_n(const std::string& name, int n);

}  // namespace dflm

