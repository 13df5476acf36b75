#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dflm/rng.hpp"
#include "dflm/sensing.hpp"
#include "dflm/sparse_recovery.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace dflm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// deterministic random s-sparse signed-spike signal
VectorXd signed_spikes(int n, int s, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd x = VectorXd::Zero(n);
  int placed = 0;
  while (placed < s) {
    int idx = static_cast<int>(rng.next_below(n));
    if (x[idx] != 0.0) continue;
    x[idx] = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
    ++placed;
  }
  return x;
}

RecoveryProblem spike_instance(std::uint64_t seed) {
  auto A = generate(8, 20, Distribution::Gaussian, seed);
  VectorXd xhat = VectorXd::Zero(20);
  xhat[2] = 2.5;
  xhat[6] = -1.0;
  return {A.entries, A.entries * xhat, 0.0};
}

}  // namespace

// ---- brute-force oracle first: it anchors the expected values below ----

TEST_CASE("oracle: identity pick") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Identity(3, 3);
  prob.b = (VectorXd(3) << 1, 0, 0).finished();
  auto res = brute_force_oracle(prob, 1);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK((res.g - prob.b).norm() == 0.0);
  CHECK(res.l1_norm == 1.0);
}

TEST_CASE("oracle: infeasible when xi is below the best residual") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Identity(3, 3);
  prob.b = (VectorXd(3) << 1, 1, 1).finished();
  prob.xi = 0.5;  // any 1-sparse solution leaves residual sqrt(2) > 0.5
  auto res = brute_force_oracle(prob, 1);
  CHECK(res.status == RecoveryStatus::Infeasible);
}

TEST_CASE("oracle: confirms the spike instance minimizer") {
  RecoveryProblem prob = spike_instance(1);
  VectorXd xhat = VectorXd::Zero(20);
  xhat[2] = 2.5;
  xhat[6] = -1.0;
  auto res = brute_force_oracle(prob, 2);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK((res.g - xhat).norm() <= 1e-10);
  CHECK(res.l1_norm == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("oracle: enumeration cap") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Identity(50, 50);
  prob.b = VectorXd::Ones(50);
  CHECK_THROWS_AS(brute_force_oracle(prob, 25), std::invalid_argument);
}

// ---- basis pursuit ----

TEST_CASE("bp: unique feasible point on the identity") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Identity(4, 4);
  prob.b = (VectorXd(4) << 0, 2, 0, 0).finished();
  auto res = bp_solve(prob);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK((res.g - prob.b).norm() <= 1e-8);
}

TEST_CASE("bp: degenerate single-row face") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Ones(1, 2);
  prob.b = (VectorXd(1) << 3).finished();
  auto res = bp_solve(prob);
  CHECK(res.status == RecoveryStatus::Optimal);
  // any optimum is accepted: assert the l1 value and feasibility only
  CHECK(res.l1_norm == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.residual_norm <= 1e-8 * 4.0);
}

TEST_CASE("bp: recovers the oracle-confirmed spike instance") {
  RecoveryProblem prob = spike_instance(1);
  VectorXd xhat = VectorXd::Zero(20);
  xhat[2] = 2.5;
  xhat[6] = -1.0;
  auto res = bp_solve(prob);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK((res.g - xhat).norm() <= 1e-6);
}

TEST_CASE("bp: zero right-hand side") {
  auto A = generate(5, 12, Distribution::Bernoulli, 2);
  RecoveryProblem prob{A.entries, VectorXd::Zero(5), 0.0};
  auto res = bp_solve(prob);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK(res.g.norm() == 0.0);
}

TEST_CASE("bp: rank-deficient rows") {
  MatrixXd A(2, 3);
  A << 1, 1, 0, 1, 1, 0;  // duplicated row
  RecoveryProblem inconsistent{A, (VectorXd(2) << 1, 2).finished(), 0.0};
  CHECK(bp_solve(inconsistent).status == RecoveryStatus::Infeasible);

  RecoveryProblem consistent{A, (VectorXd(2) << 3, 3).finished(), 0.0};
  auto res = bp_solve(consistent);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK(res.l1_norm == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.residual_norm <= 1e-8 * 4.0);
}

TEST_CASE("bp: dimension mismatch") {
  RecoveryProblem prob{MatrixXd::Identity(3, 3), VectorXd::Zero(2), 0.0};
  CHECK_THROWS_AS(bp_solve(prob), std::invalid_argument);
}

// ---- basis pursuit denoising ----

TEST_CASE("bpdn: zero when the ball contains the origin image") {
  auto A = generate(6, 15, Distribution::Gaussian, 4);
  VectorXd b = VectorXd::Constant(6, 0.01);
  RecoveryProblem prob{A.entries, b, b.norm() + 0.1};
  auto res = bpdn_solve(prob);
  CHECK(res.status == RecoveryStatus::Optimal);
  CHECK(res.g.norm() == 0.0);
  CHECK(res.iterations == 0);
}

TEST_CASE("bpdn: one-dimensional shrinkage") {
  RecoveryProblem prob;
  prob.A = MatrixXd::Identity(2, 2);
  prob.b = (VectorXd(2) << 5, 0).finished();
  prob.xi = 1.0;
  auto res = bpdn_solve(prob);
  VectorXd want = (VectorXd(2) << 4, 0).finished();
  CHECK((res.g - want).norm() <= 1e-6);
  CHECK(res.residual_norm <= 1.0 * (1.0 + 1e-8));
}

TEST_CASE("bpdn: xi must be positive") {
  RecoveryProblem prob{MatrixXd::Identity(2, 2), VectorXd::Ones(2), 0.0};
  CHECK_THROWS_AS(bpdn_solve(prob), std::invalid_argument);
}

TEST_CASE("bpdn: noisy spike regression") {
  RecoveryProblem clean = spike_instance(1);
  VectorXd xhat = VectorXd::Zero(20);
  xhat[2] = 2.5;
  xhat[6] = -1.0;
  // deterministic unit-direction noise scaled to 0.01
  Rng rng(77);
  VectorXd z(clean.b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
  z *= 0.01 / z.norm();
  RecoveryProblem noisy{clean.A, clean.b + z, 0.01};

  auto oracle = brute_force_oracle(noisy, 2);
  CHECK(oracle.status == RecoveryStatus::Optimal);
  double oracle_err_over_xi = (oracle.g - xhat).norm() / noisy.xi;

  auto res = bpdn_solve(noisy);
  CHECK(res.residual_norm <= noisy.xi * (1.0 + 1e-8));
  double err_over_xi = (res.g - xhat).norm() / noisy.xi;
  // instance-specific regression values from the oracle pilot:
  // solver err/xi = 0.8732, oracle err/xi = 0.0949, solver l1 = 3.4942 (the
  // global minimizer is not 2-sparse here, so the solver's l1 may dip below
  // the oracle's 3.5001). Frozen with a factor-2 margin.
  CHECK(oracle_err_over_xi <= 0.2);
  CHECK(err_over_xi <= 1.75);
  CHECK(res.l1_norm <= oracle.l1_norm + 1e-8);
}

// ---- cross-cutting properties ----

TEST_CASE("oracle dominance on small random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(mix_seed(1234, seed));
    int n = 12 + static_cast<int>(rng.next_below(13));  // 12..24
    int p = 5 + static_cast<int>(rng.next_below(6));    // 5..10
    auto A = generate(p, n, Distribution::Gaussian, mix_seed(seed, 9));
    VectorXd xhat = signed_spikes(n, 2, mix_seed(seed, 5));
    RecoveryProblem prob{A.entries, A.entries * xhat, 0.0};
    auto oracle = brute_force_oracle(prob, 2);
    auto res = bp_solve(prob);
    REQUIRE(oracle.status == RecoveryStatus::Optimal);
    CHECK(res.status == RecoveryStatus::Optimal);
    // the oracle searches a subset of the feasible set
    CHECK(res.l1_norm <= oracle.l1_norm + 1e-8);
  }
}

TEST_CASE("bp scaling equivariance") {
  RecoveryProblem prob = spike_instance(1);
  auto base = bp_solve(prob);
  for (double c : {3.0, 0.25}) {
    RecoveryProblem scaled{prob.A, c * prob.b, 0.0};
    auto res = bp_solve(scaled);
    CHECK((res.g - c * base.g).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, c));
  }
}

TEST_CASE("bpdn optimal l1 is nonincreasing in xi") {
  RecoveryProblem prob = spike_instance(3);
  double prev = std::numeric_limits<double>::infinity();
  for (double xi : {1e-4, 1e-3, 1e-2}) {
    RecoveryProblem noisy{prob.A, prob.b, xi};
    auto res = bpdn_solve(noisy);
    CHECK(res.l1_norm <= prev + 1e-9);
    prev = res.l1_norm;
  }
}

TEST_CASE("exact recovery rate: bernoulli n=64 p=24 s=3") {
  // smaller pilot of the acceptance criterion (20 seeds here, 100 there)
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto A = generate(24, 64, Distribution::Bernoulli, seed);
    VectorXd xhat = signed_spikes(64, 3, mix_seed(seed, 41));
    RecoveryProblem prob{A.entries, A.entries * xhat, 0.0};
    auto res = bp_solve(prob);
    if ((res.g - xhat).norm() <= 1e-6) ++hits;
  }
  CHECK(hits >= 19);
}
