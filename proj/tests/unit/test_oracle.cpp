#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "mflqr/errors.hpp"
#include "mflqr/oracle.hpp"
#include "mflqr/sim.hpp"
#include "support/fixtures.hpp"

using namespace mflqr;
using namespace mflqr::oracle;
using mflqr::testing::example1_cost;
using mflqr::testing::example1_cost_infinite;
using mflqr::testing::example1_model;

namespace {

GainSchedule gains_for(const SystemModel& m, const CostModel& c) {
  return compute_gains(solve(m, c), m, c);
}

double meanfield_deviation(const SystemModel& m, const CostModel& c, int n) {
  SystemModel sized = m;
  sized.n = n;
  const CentralizedProblem cp = build_centralized(sized, c, n);
  return compare(solve_centralized(cp), assemble_meanfield_as_centralized(gains_for(sized, c), n));
}

VectorXd stack(const VectorXd& x0, const MatrixXd& X) {
  VectorXd z(x0.size() + X.size());
  z.head(x0.size()) = x0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    z.segment(x0.size() + i * X.cols(), X.cols()) = X.row(i).transpose();
  }
  return z;
}

}  // namespace

TEST(BuildCentralized, SingleFollowerExample1) {
  const CentralizedProblem cp = build_centralized(example1_model(), example1_cost(), 1);
  MatrixXd expect(2, 2);
  // Follower diagonal is A + D/n; E sits in the leader column.
  expect << 1.0, 0.05, 0.01, 1.01;
  EXPECT_TRUE(cp.A_c.at(1).isApprox(expect, 1e-15));
  EXPECT_EQ(cp.state_size(), 2);
  EXPECT_EQ(cp.control_size(), 2);
}

TEST(BuildCentralized, QuadraticFormMatchesStageCost) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const int dx = 1 + trial % 2;
    const int du = 1 + (trial / 2) % 2;
    const int n = 3;
    const SystemModel m = mflqr::testing::random_model(rng, dx, du, n);
    const CostModel c = mflqr::testing::random_cost(rng, dx, du, 1);
    const CentralizedProblem cp = build_centralized(m, c, n);
    const VectorXd x0 = mflqr::testing::random_matrix(rng, dx, 1, -3.0, 3.0);
    const VectorXd u0 = mflqr::testing::random_matrix(rng, du, 1, -3.0, 3.0);
    const MatrixXd X = mflqr::testing::random_matrix(rng, n, dx, -3.0, 3.0);
    const MatrixXd U = mflqr::testing::random_matrix(rng, n, du, -3.0, 3.0);
    const VectorXd z = stack(x0, X);
    const VectorXd v = stack(u0, U);
    const double quad = z.dot(cp.Q_c.at(1) * z) + v.dot(cp.R_c.at(1) * v);
    const double direct = stage_cost_direct(c, 1, x0, u0, X, U);
    EXPECT_NEAR(quad, direct, 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST(BuildCentralized, ZeroStateWeights) {
  CostModel c = example1_cost();
  c.Q0 = c.Q = c.P = c.H = scalar(0.0);
  const CentralizedProblem cp = build_centralized(example1_model(), c, 4);
  EXPECT_TRUE(cp.Q_c.at(1).isZero(0.0));
}

TEST(BuildCentralized, SizeGuard) {
  EXPECT_NO_THROW(build_centralized(example1_model(), example1_cost(), 199));
  EXPECT_THROW(build_centralized(example1_model(), example1_cost(), 200), TooLarge);
}

TEST(BuildCentralized, LeaderlessDropsLeaderControl) {
  SystemModel m = example1_model(3);
  m.B0 = m.D0 = scalar(0.0);
  CostModel c = example1_cost(5);
  c.Q0 = c.R0 = scalar(0.0);
  const CentralizedProblem cp = build_centralized(m, c, 3);
  EXPECT_TRUE(cp.leaderless);
  EXPECT_EQ(cp.control_size(), 3);
  EXPECT_EQ(cp.B_c.at(1).cols(), 3);
}

TEST(SolveCentralized, TrivialCases) {
  CostModel c = example1_cost(6);
  c.Q0 = c.Q = c.P = c.H = scalar(0.0);
  const CentralizedGains zero_q = solve_centralized(build_centralized(example1_model(), c, 2));
  for (int t = 1; t <= 6; ++t) EXPECT_TRUE(zero_q.at(t).isZero(0.0));

  SystemModel m = example1_model();
  m.B = m.B0 = scalar(0.0);
  const CentralizedGains zero_b =
      solve_centralized(build_centralized(m, example1_cost(6), 2));
  for (int t = 1; t <= 6; ++t) EXPECT_TRUE(zero_b.at(t).isZero(0.0));
}

TEST(SolveCentralized, SingleFollowerRecoversAugmentedGain) {
  const SystemModel m = example1_model(1);
  const CostModel c = example1_cost(10);
  const CentralizedGains K = solve_centralized(build_centralized(m, c, 1));
  const GainSchedule g = gains_for(m, c);
  const CentralizedGains mf = assemble_meanfield_as_centralized(g, 1);
  for (int t = 1; t <= 10; ++t) {
    EXPECT_LT((K.at(t) - g.bar(t)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((mf.at(t) - g.bar(t)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Assemble, SingleFollowerRowCancelsDeviationGain) {
  MatrixXd bar(2, 2);
  bar << -0.5, -0.1, -0.05, -0.8;
  const CentralizedGains K =
      assemble_meanfield_as_centralized(GainSchedule::stationary(scalar(-0.9), bar), 1);
  EXPECT_DOUBLE_EQ(K.at(1)(1, 0), -0.05);
  EXPECT_DOUBLE_EQ(K.at(1)(1, 1), -0.8);
}

TEST(Assemble, MatchesPerAgentActions) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const int dx = 1 + trial % 2;
    const int du = 1 + (trial / 2) % 2;
    const int n = 2;
    const GainSchedule g = GainSchedule::stationary(
        mflqr::testing::random_matrix(rng, du, dx),
        mflqr::testing::random_matrix(rng, 2 * du, 2 * dx));
    const VectorXd x0 = mflqr::testing::random_matrix(rng, dx, 1);
    const MatrixXd X = mflqr::testing::random_matrix(rng, n, dx);
    const VectorXd xbar = X.colwise().mean().transpose();
    const VectorXd v = assemble_meanfield_as_centralized(g, n).at(1) * stack(x0, X);
    EXPECT_LT((v.head(du) - leader_action(g, 1, x0, xbar)).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < n; ++i) {
      const VectorXd ui = follower_action(g, 1, X.row(i).transpose(), x0, xbar);
      EXPECT_LT((v.segment(du * (i + 1), du) - ui).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Assemble, FollowerPermutationIsExchangeable) {
  const int n = 4;
  const GainSchedule g = gains_for(example1_model(n), example1_cost(5));
  const MatrixXd K = assemble_meanfield_as_centralized(g, n).at(2);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n + 1);
  perm.indices() << 0, 3, 1, 4, 2;
  EXPECT_EQ(MatrixXd(perm * K * perm.transpose()), K);
}

TEST(Compare, IdenticalInputsGiveZero) {
  const CentralizedGains K = solve_centralized(build_centralized(example1_model(), example1_cost(4), 2));
  EXPECT_EQ(compare(K, K), 0.0);
  CentralizedGains shorter = K;
  shorter.K.pop_back();
  EXPECT_THROW(compare(K, shorter), DimensionMismatch);
}

TEST(Compare, Example1ThreeFollowers) {
  EXPECT_LT(meanfield_deviation(example1_model(), example1_cost(20), 3), 1e-8);
}

TEST(Compare, RandomScalarModels) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = std::array<int, 3>{2, 3, 5}[trial % 3];
    const SystemModel m = mflqr::testing::random_model(rng, 1, 1, n);
    const CostModel c = mflqr::testing::random_cost(rng, 1, 1, 10);
    EXPECT_LT(meanfield_deviation(m, c, n), 1e-8) << "trial " << trial;
  }
}

TEST(Compare, RandomVectorModelsAndTimeVarying) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 6; ++trial) {
    SystemModel m = mflqr::testing::random_model(rng, 2, 1 + trial % 2, 3);
    CostModel c = mflqr::testing::random_cost(rng, 2, 1 + trial % 2, 8);
    if (trial % 2 == 0) {
      std::vector<MatrixXd> steps;
      for (int t = 0; t < 8; ++t) steps.push_back(mflqr::testing::random_matrix(rng, 2, 2, -1.1, 1.1));
      m.A = MatrixSchedule::sequence(steps);
    }
    EXPECT_LT(meanfield_deviation(m, c, 3), 1e-8) << "trial " << trial;
  }
}

TEST(Compare, LeaderlessMode) {
  SystemModel m = example1_model(3);
  m.B0 = m.D0 = scalar(0.0);
  CostModel c = example1_cost(12);
  c.Q0 = c.R0 = scalar(0.0);
  EXPECT_LT(meanfield_deviation(m, c, 3), 1e-8);
}

TEST(Compare, InfiniteHorizon) {
  for (double beta : {1.0, 0.9}) {
    EXPECT_LT(meanfield_deviation(example1_model(), example1_cost_infinite(beta), 3), 1e-8);
  }
}

TEST(ExpectedCost, ZeroMomentsGiveZero) {
  SystemModel m = example1_model(3);
  const CentralizedProblem cp = build_centralized(m, example1_cost(5), 3);
  const CentralizedGains K = solve_centralized(cp);
  const Eigen::Index N = cp.state_size();
  EXPECT_EQ(expected_cost(cp, K, VectorXd::Zero(N), MatrixXd::Zero(N, N),
                          MatrixXd::Zero(N, N), 5, 1.0),
            0.0);
}

TEST(ExpectedCost, MatchesMonteCarlo) {
  const int n = 2;
  const int T = 5;
  const SystemModel m = example1_model(n);
  const CostModel c = example1_cost(T);
  const GainSchedule g = gains_for(m, c);
  const CentralizedProblem cp = build_centralized(m, c, n);
  const StackedMoments mom = stacked_moments(m, n);
  const double exact = expected_cost(cp, assemble_meanfield_as_centralized(g, n),
                                     mom.init_mean, mom.init_cov, mom.noise_cov, T, 1.0);
  const int runs = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < runs; ++r) {
    const double cost = evaluate_cost_direct(simulate(m, c, g, T, static_cast<std::uint64_t>(r)), c);
    sum += cost;
    sum_sq += cost * cost;
  }
  const double mean = sum / runs;
  const double var = (sum_sq - runs * mean * mean) / (runs - 1);
  const double se = std::sqrt(var / runs);
  EXPECT_LT(std::abs(mean - exact), 3.0 * se) << "exact " << exact << " mc " << mean;
}

TEST(ExpectedCost, OptimalAgainstPerturbations) {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 3;
  const SystemModel m = example1_model(n);
  for (bool infinite : {false, true}) {
    const CostModel c = infinite ? example1_cost_infinite(0.9) : example1_cost(10);
    const int T = infinite ? 400 : 10;
    const double beta = infinite ? 0.9 : 1.0;
    const CentralizedProblem cp = build_centralized(m, c, n);
    const StackedMoments mom = stacked_moments(m, n);
    const CentralizedGains K = assemble_meanfield_as_centralized(gains_for(m, c), n);
    const double best = expected_cost(cp, K, mom.init_mean, mom.init_cov, mom.noise_cov, T, beta);
    for (int trial = 0; trial < 50; ++trial) {
      CentralizedGains P = K;
      for (MatrixXd& Kt : P.K) {
        MatrixXd dir = MatrixXd::NullaryExpr(Kt.rows(), Kt.cols(), [&] { return gauss(rng); });
        Kt += 0.01 * dir / dir.cwiseAbs().maxCoeff();
      }
      const double perturbed =
          expected_cost(cp, P, mom.init_mean, mom.init_cov, mom.noise_cov, T, beta);
      EXPECT_GT(perturbed, best) << "trial " << trial;
    }
  }
}

TEST(StackedMoments, Example1Blocks) {
  const StackedMoments mom = stacked_moments(example1_model(2), 2);
  EXPECT_EQ(mom.init_mean(0), 30.0);
  EXPECT_EQ(mom.init_mean(1), 10.0);
  EXPECT_EQ(mom.init_cov(0, 0), 0.0);
  EXPECT_NEAR(mom.init_cov(1, 1), 400.0 / 12.0, 1e-12);
  EXPECT_EQ(mom.init_cov(1, 2), 0.0);
  EXPECT_EQ(mom.noise_cov(0, 0), 0.1);
  EXPECT_EQ(mom.noise_cov(2, 2), 0.2);
}
