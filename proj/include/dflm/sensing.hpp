#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace dflm {

/// Entry distributions for the random interpolation directions.
/// Gaussian:      a_ij ~ N(0, 1/p)
/// Bernoulli:     a_ij = +-1/sqrt(p), each with probability 1/2
/// BernoulliLike: a_ij = +-sqrt(3/p) with probability 1/6 each, 0 otherwise
enum class Distribution { Gaussian, Bernoulli, BernoulliLike };

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

/// The p x n matrix stacking the random directions (v^j)^T as rows. Plays the
/// compressed-sensing measurement role when recovering Jacobian rows.
struct SensingMatrix {
  Eigen::MatrixXd entries;  // p x n, row j = (v^j)^T
  int p = 0;
  int n = 0;
  Distribution distribution = Distribution::Bernoulli;
  std::uint64_t seed = 0;

  // p >= n leaves the sparse-recovery regime; accepted but flagged.
  bool overdetermined() const { return p >= n; }

  // Diagnostic: for Bernoulli this equals sqrt(n/p) exactly, for
  // BernoulliLike it is bounded by sqrt(3n/p); Gaussian has no a priori bound.
  double max_row_norm() const;
};

/// Draws a p x n matrix with i.i.d. entries from `dist`. Bit-identical output
/// for identical (p, n, dist, seed); callable concurrently.
SensingMatrix generate(int p, int n, Distribution dist, std::uint64_t seed);

/// Sizing rule ceil(2s log(n/(2s)) / a1) clamped to [1, n-1] (natural log).
/// Advisory only; throws std::invalid_argument when 2s >= n, where the bound
/// is vacuous ("sparsity too high for sizing rule").
int recommended_p(int n, int s, double a1 = 1.0);

/// Exact s-RIP constant delta_s = max over all s-column submatrices B of
/// max(lambda_max(B^T B) - 1, 1 - lambda_min(B^T B)). Test oracle: enumerates
/// all C(n, s) supports and throws std::invalid_argument beyond max_subsets.
double rip_constant_bruteforce(const Eigen::MatrixXd& A, int s,
                               std::uint64_t max_subsets = 1000000);
double rip_constant_bruteforce(const SensingMatrix& A, int s,
                               std::uint64_t max_subsets = 1000000);

}  // namespace dflm
