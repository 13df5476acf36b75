#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dflm/rng.hpp"
#include "dflm/sensing.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <set>

using namespace dflm;
using Eigen::MatrixXd;

namespace {

// Independent re-implementation of the s = 2 RIP constant: closed-form
// eigenvalues of every 2 x 2 Gram block. Cross-checks the general oracle.
double rip2_pairwise(const MatrixXd& A) {
  double delta = 0.0;
  for (int i = 0; i < A.cols(); ++i) {
    for (int j = i + 1; j < A.cols(); ++j) {
      double a = A.col(i).squaredNorm();
      double d = A.col(j).squaredNorm();
      double b = A.col(i).dot(A.col(j));
      double tr = a + d;
      double disc = std::sqrt((a - d) * (a - d) + 4.0 * b * b);
      delta = std::max({delta, 0.5 * (tr + disc) - 1.0, 1.0 - 0.5 * (tr - disc)});
    }
  }
  return delta;
}

}  // namespace

TEST_CASE("bernoulli entries and row norms") {
  auto A = generate(4, 16, Distribution::Bernoulli, 42);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 16; ++j) CHECK(std::abs(A.entries(i, j)) == 0.5);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(A.entries.row(i).norm() - 2.0) <= 1e-13);
  CHECK(std::abs(A.max_row_norm() - 2.0) <= 1e-13);

  // the row-norm identity sqrt(n/p) holds for every Bernoulli matrix
  for (std::uint64_t seed : {1, 2, 3}) {
    auto B = generate(7, 33, Distribution::Bernoulli, seed);
    double want = std::sqrt(33.0 / 7.0);
    for (int i = 0; i < 7; ++i) CHECK(std::abs(B.entries.row(i).norm() - want) <= 1e-12);
  }
}

TEST_CASE("bernoulli-like support and zero fraction") {
  const double spike = std::sqrt(1.0 / 3.0);  // sqrt(3/9)
  long zeros = 0, total = 0;
  for (std::uint64_t t = 0; total < 100000; ++t) {
    auto A = generate(9, 27, Distribution::BernoulliLike, 7 + t);
    double bound = std::sqrt(3.0 * 27.0 / 9.0);
    CHECK(A.max_row_norm() <= bound + 1e-12);
    for (int i = 0; i < 9 && total < 100000; ++i)
      for (int j = 0; j < 27 && total < 100000; ++j) {
        double v = A.entries(i, j);
        bool ok = v == 0.0 || std::abs(std::abs(v) - spike) <= 1e-15;
        if (!ok) FAIL_CHECK("entry outside the three-point support: " << v);
        if (v == 0.0) ++zeros;
        ++total;
      }
  }
  double frac = static_cast<double>(zeros) / static_cast<double>(total);
  CHECK(frac >= 0.663);
  CHECK(frac <= 0.670);
}

TEST_CASE("gaussian moments") {
  auto A = generate(50, 100, Distribution::Gaussian, 1);
  double mean = A.entries.mean();
  double var = (A.entries.array() - mean).square().sum() / (A.entries.size() - 1);
  CHECK(mean >= -0.01);
  CHECK(mean <= 0.01);
  CHECK(var >= 0.018);
  CHECK(var <= 0.022);
}

TEST_CASE("determinism and seed separation") {
  auto a = generate(6, 40, Distribution::BernoulliLike, 99);
  auto b = generate(6, 40, Distribution::BernoulliLike, 99);
  CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() == 0.0);
  auto c = generate(6, 40, Distribution::BernoulliLike, 100);
  CHECK((a.entries - c.entries).cwiseAbs().maxCoeff() > 0.0);
  CHECK_FALSE(a.overdetermined());
  CHECK(generate(5, 5, Distribution::Gaussian, 1).overdetermined());
}

TEST_CASE("recommended_p values and bounds") {
  CHECK(recommended_p(100, 5, 1.0) == 24);
  CHECK(recommended_p(1000, 1, 0.5) == 25);
  CHECK_THROWS_AS(recommended_p(4, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(recommended_p(10, 5, 1.0), std::invalid_argument);
  CHECK(recommended_p(10, 1, 1e-9) == 9);  // clamped to n - 1

  int prev = 0;
  for (int s = 1; 2 * s < 200; ++s) {
    int p = recommended_p(200, s, 1.0);
    CHECK(p >= prev);
    CHECK(p >= 1);
    CHECK(p <= 199);
    prev = p;
  }
}

TEST_CASE("rip constant: identity and tiny hand cases") {
  MatrixXd I = MatrixXd::Identity(6, 6);
  for (int s = 1; s <= 6; ++s) CHECK(rip_constant_bruteforce(I, s) <= 1e-12);

  MatrixXd row(1, 2);
  row << 1.0, 1.0;
  CHECK(std::abs(rip_constant_bruteforce(row, 1)) <= 1e-14);
  CHECK(std::abs(rip_constant_bruteforce(row, 2) - 1.0) <= 1e-14);
}

TEST_CASE("rip constant matches an independent pairwise enumeration") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto A = generate(20, 40, Distribution::Bernoulli, seed);
    double a = rip_constant_bruteforce(A, 2);
    double b = rip2_pairwise(A.entries);
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("rip constant stays small in the well-conditioned regime") {
  // Gaussian 50 x 100 with variance 1/p: the delta_2 distribution has median
  // ~0.93 and 95th percentile ~1.11 (cross-checked against an independent
  // numpy enumeration), so the smoke bounds are 1.25 at the 95% level and a
  // median below 1.
  int below_125 = 0, below_1 = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto A = generate(50, 100, Distribution::Gaussian, seed);
    double d = rip_constant_bruteforce(A, 2);
    if (d < 1.25) ++below_125;
    if (d < 1.0) ++below_1;
  }
  CHECK(below_125 >= 95);
  CHECK(below_1 >= 50);
}

TEST_CASE("enumeration cap") {
  MatrixXd A = MatrixXd::Identity(40, 40);
  CHECK_THROWS_AS(rip_constant_bruteforce(A, 20, 1000000), std::invalid_argument);
}

TEST_CASE("seed mixing separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t run = 0; run < 100; ++run)
    for (std::uint64_t k = 0; k < 100; ++k) seen.insert(mix_seed(run, k));
  CHECK(seen.size() == 10000);
}
