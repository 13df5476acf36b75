#include "dflm/sensing.hpp"

#include "dflm/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dflm {

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::Gaussian: return "gaussian";
    case Distribution::Bernoulli: return "bernoulli";
    case Distribution::BernoulliLike: return "bernoulli-like";
  }
  return "unknown";
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "gaussian") return Distribution::Gaussian;
  if (s == "bernoulli") return Distribution::Bernoulli;
  if (s == "bernoulli-like" || s == "bernoulli_like") return Distribution::BernoulliLike;
  throw std::invalid_argument("unknown distribution: " + s);
}

double SensingMatrix::max_row_norm() const {
  return entries.rowwise().norm().maxCoeff();
}

SensingMatrix generate(int p, int n, Distribution dist, std::uint64_t seed) {
  if (p < 1 || n < 1) throw std::invalid_argument("generate: p and n must be positive");
  SensingMatrix out;
  out.entries.resize(p, n);
  out.p = p;
  out.n = n;
  out.distribution = dist;
  out.seed = seed;

  Rng rng(seed);
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
  const double spike = std::sqrt(3.0 / static_cast<double>(p));

  // fill row by row so the layout matches the stacking of the directions
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      switch (dist) {
        case Distribution::Gaussian:
          v = rng.next_gaussian() * inv_sqrt_p;
          break;
        case Distribution::Bernoulli:
          v = (rng.next_u64() & 1ULL) ? inv_sqrt_p : -inv_sqrt_p;
          break;
        case Distribution::BernoulliLike: {
          double u = rng.next_double();
          if (u < 1.0 / 6.0)
            v = spike;
          else if (u < 1.0 / 3.0)
            v = -spike;
          else
            v = 0.0;
          break;
        }
      }
      out.entries(i, j) = v;
    }
  }
  return out;
}

int recommended_p(int n, int s, double a1) {
  if (n < 1 || s < 1) throw std::invalid_argument("recommended_p: n, s must be positive");
  if (a1 <= 0.0) throw std::invalid_argument("recommended_p: a1 must be positive");
  if (2 * s >= n) throw std::invalid_argument("sparsity too high for sizing rule (2s >= n)");
  // 2t log(n/(2t)) peaks at t = n/(2e) and then decays; evaluating at the
  // peak past that point keeps the recommendation nondecreasing in s.
  const double t = std::min(static_cast<double>(s),
                            static_cast<double>(n) / (2.0 * std::exp(1.0)));
  const double raw = 2.0 * t * std::log(static_cast<double>(n) / (2.0 * t)) / a1;
  auto p = static_cast<long long>(std::ceil(raw));
  if (p < 1) p = 1;
  if (p > n - 1) p = n - 1;
  return static_cast<int>(p);
}

namespace {

// C(n, k) with saturation at cap+1 to avoid overflow.
std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double acc = 1.0L;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (acc > static_cast<long double>(cap) * 2.0L) return cap + 1;
  }
  return static_cast<std::uint64_t>(acc + 0.5L);
}

}  // namespace

double rip_constant_bruteforce(const Eigen::MatrixXd& A, int s, std::uint64_t max_subsets) {
  const int n = static_cast<int>(A.cols());
  if (s < 1 || s > n) throw std::invalid_argument("rip_constant_bruteforce: need 1 <= s <= n");
  if (binomial_capped(n, s, max_subsets) > max_subsets)
    throw std::invalid_argument("instance too large for brute force");

  // Vectors with at most s nonzeros are covered by the size-s supports
  // (eigenvalue interlacing of principal submatrices), so only those are
  // enumerated.
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i;

  Eigen::MatrixXd B(A.rows(), s);
  Eigen::MatrixXd G(s, s);
  double delta = 0.0;
  for (;;) {
    for (int j = 0; j < s; ++j) B.col(j) = A.col(idx[j]);
    G.noalias() = B.transpose() * B;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    delta = std::max({delta, eig.eigenvalues().maxCoeff() - 1.0,
                      1.0 - eig.eigenvalues().minCoeff()});

    int i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  return delta;
}

double rip_constant_bruteforce(const SensingMatrix& A, int s, std::uint64_t max_subsets) {
  return rip_constant_bruteforce(A.entries, s, max_subsets);
}

}  // namespace dflm
