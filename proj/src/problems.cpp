#include "dflm/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace dflm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Problem broyden_tridiagonal(int n) {
  if (n < 2) throw std::invalid_argument("broyden: n >= 2 required");
  Problem p;
  p.name = "broyden";
  p.n = n;
  p.m = n;
  p.row_sparsity = 3;
  p.initial_point = VectorXd::Constant(n, -1.0);
  p.eval = [n](const VectorXd& x) {
    VectorXd F(n);
    for (int i = 0; i < n; ++i) {
      double xm = i > 0 ? x[i - 1] : 0.0;
      double xp = i + 1 < n ? x[i + 1] : 0.0;
      F[i] = (3.0 - 2.0 * x[i]) * x[i] - xm - 2.0 * xp + 1.0;
    }
    return F;
  };
  p.analytic_jacobian = [n](const VectorXd& x) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      J(i, i) = 3.0 - 4.0 * x[i];
      if (i > 0) J(i, i - 1) = -1.0;
      if (i + 1 < n) J(i, i + 1) = -2.0;
    }
    return J;
  };
  return p;
}

namespace {
constexpr double kValleyC1 = 1.003344481605351;
constexpr double kValleyC2 = -3.344481605351171e-3;
}  // namespace

Problem tridimensional_valley(int n) {
  if (n < 3 || n % 3 != 0) throw std::invalid_argument("valley: n must be a multiple of 3");
  Problem p;
  p.name = "valley";
  p.n = n;
  p.m = n;
  p.row_sparsity = 2;
  p.initial_point.resize(n);
  for (int i = 0; i < n; i += 3) {
    p.initial_point[i] = -4.0;
    p.initial_point[i + 1] = 1.0;
    p.initial_point[i + 2] = 2.0;
  }
  p.eval = [n](const VectorXd& x) {
    VectorXd F(n);
    for (int i = 0; i < n; i += 3) {
      double t = x[i];
      F[i] = (kValleyC2 * t * t * t + kValleyC1 * t) * std::exp(-t * t / 100.0) - 1.0;
      F[i + 1] = 10.0 * (std::sin(t) - x[i + 1]);
      F[i + 2] = 10.0 * (std::cos(t) - x[i + 2]);
    }
    return F;
  };
  p.analytic_jacobian = [n](const VectorXd& x) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; i += 3) {
      double t = x[i];
      double e = std::exp(-t * t / 100.0);
      double u = kValleyC2 * t * t * t + kValleyC1 * t;
      double du = 3.0 * kValleyC2 * t * t + kValleyC1;
      J(i, i) = (du - u * t / 50.0) * e;
      J(i + 1, i) = 10.0 * std::cos(t);
      J(i + 1, i + 1) = -10.0;
      J(i + 2, i) = -10.0 * std::sin(t);
      J(i + 2, i + 2) = -10.0;
    }
    return J;
  };
  return p;
}

Problem extended_freudenstein_roth(int n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("freudenstein: n must be even");
  Problem p;
  p.name = "freudenstein";
  p.n = n;
  p.m = n;
  p.row_sparsity = 2;
  p.initial_point.resize(n);
  for (int i = 0; i < n; i += 2) {
    p.initial_point[i] = 90.0;
    p.initial_point[i + 1] = 60.0;
  }
  p.eval = [n](const VectorXd& x) {
    VectorXd F(n);
    for (int i = 0; i < n; i += 2) {
      double a = x[i], b = x[i + 1];
      F[i] = a + ((5.0 - b) * b - 2.0) * b - 13.0;
      F[i + 1] = a + ((b + 1.0) * b - 14.0) * b - 29.0;
    }
    return F;
  };
  p.analytic_jacobian = [n](const VectorXd& x) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; i += 2) {
      double b = x[i + 1];
      J(i, i) = 1.0;
      J(i, i + 1) = 10.0 * b - 3.0 * b * b - 2.0;
      J(i + 1, i) = 1.0;
      J(i + 1, i + 1) = 3.0 * b * b + 2.0 * b - 14.0;
    }
    return J;
  };
  return p;
}

Problem trigonometric_system(int n) {
  if (n < 5 || n % 5 != 0) throw std::invalid_argument("trigonometric: n must be a multiple of 5");
  Problem p;
  p.name = "trigonometric";
  p.n = n;
  p.m = n;
  p.row_sparsity = 5;  // the own-column terms live inside the block of five
  p.initial_point.resize(n);
  for (int i = 0; i < n; ++i) p.initial_point[i] = static_cast<double>(i + 1) / n;
  p.eval = [n](const VectorXd& x) {
    VectorXd F(n);
    for (int i = 0; i < n; ++i) {
      int l = i / 5;
      double sum = 0.0;
      for (int j = 5 * l; j < 5 * l + 5; ++j) sum += std::cos(x[j]);
      F[i] = 5.0 - (l + 1) * (1.0 - std::cos(x[i])) - std::sin(x[i]) - sum;
    }
    return F;
  };
  p.analytic_jacobian = [n](const VectorXd& x) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      int l = i / 5;
      for (int j = 5 * l; j < 5 * l + 5; ++j) J(i, j) = std::sin(x[j]);
      J(i, i) = -static_cast<double>(l) * std::sin(x[i]) - std::cos(x[i]);
    }
    return J;
  };
  return p;
}

MatrixXd forward_difference_jacobian(const Problem& p, const VectorXd& x, double step) {
  return forward_difference_jacobian(p, x, p.eval(x), step);
}

MatrixXd forward_difference_jacobian(const Problem& p, const VectorXd& x, const VectorXd& F0,
                                     double step) {
  MatrixXd J(p.m, p.n);
  VectorXd xs = x;
  for (int j = 0; j < p.n; ++j) {
    xs[j] = x[j] + step;
    J.col(j) = (p.eval(xs) - F0) / step;
    xs[j] = x[j];
  }
  return J;
}

void check_problem(const Problem& p) {
  if (p.name.empty()) throw std::invalid_argument("problem has no name");
  if (p.n < 1 || p.m < 1) throw std::invalid_argument(p.name + ": bad dimensions");
  if (!p.eval) throw std::invalid_argument(p.name + ": missing eval");
  if (p.initial_point.size() != p.n)
    throw std::invalid_argument(p.name + ": initial point has wrong dimension");

  VectorXd F0 = p.eval(p.initial_point);
  if (F0.size() != p.m) throw std::invalid_argument(p.name + ": eval returns wrong dimension");
  if (!F0.allFinite()) throw std::invalid_argument(p.name + ": F(x0) is not finite");

  if (p.analytic_jacobian) {
    MatrixXd Ja = p.analytic_jacobian(p.initial_point);
    MatrixXd Jfd = forward_difference_jacobian(p, p.initial_point);
    double err = (Ja - Jfd).cwiseAbs().maxCoeff();
    if (err > 1e-5)
      throw std::invalid_argument(p.name + ": analytic Jacobian fails the finite-difference check");
    if (p.row_sparsity > 0) {
      for (int i = 0; i < p.m; ++i) {
        int nnz = 0;
        for (int j = 0; j < p.n; ++j)
          if (Ja(i, j) != 0.0) ++nnz;
        if (nnz > p.row_sparsity)
          throw std::invalid_argument(p.name + ": declared row_sparsity is violated");
      }
    }
  }
}

void ProblemRegistry::add_family(const std::string& name, Factory make) {
  std::lock_guard<std::mutex> lock(mu_);
  if (entries_.count(name)) throw std::invalid_argument("duplicate problem name: " + name);
  entries_[name] = Entry{std::move(make), 0};
}

void ProblemRegistry::add(Problem p) {
  check_problem(p);
  std::lock_guard<std::mutex> lock(mu_);
  if (entries_.count(p.name)) throw std::invalid_argument("duplicate problem name: " + p.name);
  int n = p.n;
  std::string name = p.name;
  entries_[name] = Entry{[stored = std::move(p)](int) { return stored; }, n};
}

bool ProblemRegistry::contains(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.count(name) > 0;
}

std::vector<std::string> ProblemRegistry::names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

Problem ProblemRegistry::make(const std::string& name, int n) const {
  Entry entry;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown problem: " + name);
    entry = it->second;
  }
  if (entry.fixed_n > 0) {
    if (n != 0 && n != entry.fixed_n)
      throw std::invalid_argument(name + " is registered with fixed n=" + std::to_string(entry.fixed_n));
    return entry.factory(entry.fixed_n);
  }
  if (n < 1) throw std::invalid_argument(name + ": dimension required");
  return entry.factory(n);
}

ProblemRegistry& builtin_registry() {
  static ProblemRegistry* reg = [] {
    auto* r = new ProblemRegistry;
    r->add_family("broyden", broyden_tridiagonal);
    r->add_family("valley", tridimensional_valley);
    r->add_family("freudenstein", extended_freudenstein_roth);
    r->add_family("trigonometric", trigonometric_system);
    return r;
  }();
  return *reg;
}

int nearest_valid_n(const std::string& name, int n) {
  auto round_up = [n](int k) { return ((n + k - 1) / k) * k; };
  if (name == "valley") return round_up(3);
  if (name == "freudenstein") return round_up(2);
  if (name == "trigonometric") return round_up(5);
  return n;
}

}  // namespace dflm
