#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <set>

#include "mflqr/errors.hpp"
#include "mflqr/sim.hpp"
#include "support/fixtures.hpp"

using namespace mflqr;
using mflqr::testing::example1_cost;
using mflqr::testing::example1_cost_infinite;
using mflqr::testing::example1_model;

namespace {

GainSchedule gains_for(const SystemModel& m, const CostModel& c) {
  return compute_gains(solve(m, c), m, c);
}

SystemModel noiseless(SystemModel m) {
  m.noise.leader = Distribution::zero(static_cast<int>(m.A0.rows()));
  m.noise.follower = Distribution::zero(static_cast<int>(m.A.rows()));
  return m;
}

GainSchedule random_gains(std::mt19937_64& rng, int dx, int du, int T) {
  std::vector<MatrixXd> dev, bar;
  for (int t = 0; t < T; ++t) {
    dev.push_back(mflqr::testing::random_matrix(rng, du, dx, -0.5, 0.5));
    bar.push_back(mflqr::testing::random_matrix(rng, 2 * du, 2 * dx, -0.5, 0.5));
  }
  return GainSchedule::finite(dev, bar);
}

double max_gap(const SimulationTrace& tr, int k) {
  return (tr.X[k].rowwise() - tr.x0[k].transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(NoiseStream, DeterministicAndDistinct) {
  NoiseStream a(1, 2, 3), b(1, 2, 3);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.next_u64(), b.next_u64());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {0, 1}) {
    for (std::uint64_t agent = 0; agent < 20; ++agent) {
      for (std::uint64_t t = 0; t < 20; ++t) {
        firsts.insert(NoiseStream(seed, agent, t).next_u64());
      }
    }
  }
  EXPECT_EQ(firsts.size(), 2u * 20u * 20u);
}

TEST(NoiseStream, EmpiricalMeans) {
  const int N = 100000;
  for (std::uint64_t agent : {0, 1, 57}) {
    NoiseStream s(42, agent, 9);
    double sum_n = 0.0, sum_u = 0.0;
    for (int k = 0; k < N; ++k) sum_n += s.normal();
    for (int k = 0; k < N; ++k) sum_u += s.uniform() - 0.5;
    EXPECT_LT(std::abs(sum_n / N), 4.0 / std::sqrt(N));
    EXPECT_LT(std::abs(sum_u / N), 4.0 * std::sqrt(1.0 / 12.0) / std::sqrt(N));
  }
}

TEST(NoiseStream, UniformStaysInOpenInterval) {
  NoiseStream s(0, 0, 0);
  for (int k = 0; k < 100000; ++k) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Draw, Kinds) {
  NoiseStream s(3, 1, 1);
  EXPECT_TRUE(draw(Distribution::zero(2), MatrixXd(), s).isZero(0.0));
  const VectorXd p = VectorXd::Constant(2, 7.5);
  EXPECT_EQ(draw(Distribution::point(p), MatrixXd(), s), p);
  const Distribution u = Distribution::uniform(VectorXd::Constant(2, -1.0),
                                               VectorXd::Constant(2, 3.0));
  for (int k = 0; k < 1000; ++k) {
    const VectorXd v = draw(u, MatrixXd(), s);
    EXPECT_TRUE((v.array() >= -1.0).all() && (v.array() <= 3.0).all());
  }
  const Distribution g = Distribution::gaussian(VectorXd::Constant(1, 5.0), scalar(4.0));
  double sum = 0.0;
  for (int k = 0; k < 20000; ++k) sum += draw(g, scalar(2.0), s)(0);
  EXPECT_NEAR(sum / 20000.0, 5.0, 4.0 * 2.0 / std::sqrt(20000.0));
}

TEST(Simulate, IdentityDynamicsWithoutInputStayConstant) {
  SystemModel m = noiseless(example1_model(4));
  m.D0 = m.D = m.E = scalar(0.0);
  const GainSchedule zero = GainSchedule::stationary(scalar(0.0), MatrixXd::Zero(2, 2));
  const SimulationTrace tr = simulate(m, example1_cost(), zero, 15, 9);
  for (int k = 1; k <= 15; ++k) {
    EXPECT_EQ(tr.x0[k], tr.x0[0]);
    EXPECT_EQ(tr.X[k], tr.X[0]);
  }
  EXPECT_EQ(tr.x0[0](0), 30.0);
}

TEST(Simulate, SingleFollowerMatchesScalarLqr) {
  SystemModel m = noiseless(example1_model(1));
  m.D0 = m.D = m.E = scalar(0.0);
  CostModel c = example1_cost(25);
  c.P = c.H = scalar(0.0);
  const SimulationTrace tr = simulate(m, c, gains_for(m, c), 25, 4);

  // Independent scalar LQR for the follower: a = 1, b = 0.2, q = 0.1, r = 50.
  const double a = 1.0, b = 0.2, q = 0.1, r = 50.0;
  std::vector<double> value(27, 0.0);
  for (int t = 25; t >= 1; --t) {
    const double m_next = value[t + 1];
    value[t] = q + a * a * m_next - (a * b * m_next) * (a * b * m_next) / (b * b * m_next + r);
  }
  double x = tr.X[0](0, 0);
  for (int t = 1; t <= 25; ++t) {
    const double m_next = value[t + 1];
    const double u = -(a * b * m_next) / (b * b * m_next + r) * x;
    EXPECT_NEAR(tr.U[t - 1](0, 0), u, 1e-12 * std::max(1.0, std::abs(u)));
    x = a * x + b * u;
    EXPECT_NEAR(tr.X[t](0, 0), x, 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST(Simulate, Example1SpreadShrinks) {
  const SystemModel m = example1_model();
  const CostModel c = example1_cost();
  const SimulationTrace tr = simulate(m, c, gains_for(m, c), 80, 0);
  ASSERT_EQ(tr.mean_abs_dev.size(), 80u);
  EXPECT_LT(tr.mean_abs_dev.back(), 0.1 * tr.mean_abs_dev.front());
  // Initial states come from the configured support.
  EXPECT_GE(tr.X[0].minCoeff(), 0.0);
  EXPECT_LE(tr.X[0].maxCoeff(), 20.0);
}

TEST(Simulate, NoiselessConvergence) {
  const SystemModel m = noiseless(example1_model());
  const CostModel c = example1_cost();
  const SimulationTrace fin = simulate(m, c, gains_for(m, c), 80, 0);
  EXPECT_LT(max_gap(fin, 79), 0.05 * max_gap(fin, 0));

  const SimulationTrace inf =
      simulate(m, example1_cost_infinite(), gains_for(m, example1_cost_infinite()), 80, 0);
  EXPECT_LT(max_gap(inf, 79), 0.05 * max_gap(inf, 0));
  // Stationary gains: non-increasing once the leader has caught up.
  const int transient = 10;
  for (int k = transient; k < 80; ++k) {
    EXPECT_LE(max_gap(inf, k + 1), max_gap(inf, k) * (1.0 + 1e-12)) << "k " << k;
  }
  // Finite gains shrink to zero near t = T, so only the early part is monotone.
  for (int k = transient; k < 80 - 15; ++k) {
    EXPECT_LE(max_gap(fin, k + 1), max_gap(fin, k) * (1.0 + 1e-12)) << "k " << k;
  }
}

TEST(Simulate, DeterministicAndMeanFieldExact) {
  const SystemModel m = example1_model(30);
  const CostModel c = example1_cost(40);
  const GainSchedule g = gains_for(m, c);
  const SimulationTrace a = simulate(m, c, g, 40, 77);
  const SimulationTrace b = simulate(m, c, g, 40, 77);
  const SimulationTrace other = simulate(m, c, g, 40, 78);
  for (std::size_t k = 0; k < a.X.size(); ++k) {
    EXPECT_EQ(a.X[k], b.X[k]);
    EXPECT_EQ(a.x0[k], b.x0[k]);
    EXPECT_EQ(a.xbar[k], a.X[k].colwise().mean().transpose());
  }
  EXPECT_EQ(a.stage_cost, b.stage_cost);
  EXPECT_NE(a.X[0], other.X[0]);
}

TEST(Simulate, NoiseDoesNotDependOnFollowerCount) {
  const SystemModel small = example1_model(3);
  const SystemModel large = example1_model(50);
  const CostModel c = example1_cost(5);
  const GainSchedule g = gains_for(small, c);
  const SimulationTrace a = simulate(small, c, g, 5, 12);
  const SimulationTrace b = simulate(large, c, g, 5, 12);
  EXPECT_EQ(a.X[0].topRows(3), b.X[0].topRows(3));
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(a.w0[k], b.w0[k]);
    EXPECT_EQ(a.W[k].topRows(3), b.W[k].topRows(3));
  }
}

TEST(Simulate, DivergenceIsReported) {
  const SystemModel m = example1_model(3);
  const GainSchedule bad = GainSchedule::stationary(scalar(1e4), MatrixXd::Constant(2, 2, 1e4));
  try {
    simulate(m, example1_cost(), bad, 80, 0);
    FAIL() << "expected Diverged";
  } catch (const Diverged& e) {
    EXPECT_GE(e.time(), 1);
    EXPECT_LT(e.time(), 80);
  }
}

TEST(Simulate, ScheduleTooShort) {
  const SystemModel m = example1_model(3);
  const GainSchedule g = gains_for(m, example1_cost(5));
  EXPECT_THROW(simulate(m, example1_cost(10), g, 10, 0), DimensionMismatch);
  EXPECT_THROW(simulate(m, example1_cost(5), g, 0, 0), DimensionMismatch);
}

TEST(Cost, HandEvaluatedStage) {
  CostModel c;
  c.Q0 = scalar(1.0);
  c.Q = scalar(0.0);
  c.P = scalar(1.0);
  c.R = c.R0 = scalar(0.0);
  c.H = scalar(2.0);
  MatrixXd X(2, 1);
  X << 1.0, 3.0;
  const double s = stage_cost_direct(c, 1, VectorXd::Constant(1, 1.0), VectorXd::Zero(1), X,
                                     MatrixXd::Zero(2, 1));
  EXPECT_DOUBLE_EQ(s, 5.0);

  c.Q0 = c.P = c.H = scalar(0.0);
  EXPECT_EQ(stage_cost_direct(c, 1, VectorXd::Constant(1, 4.0), VectorXd::Constant(1, 1.0),
                              X, MatrixXd::Ones(2, 1)),
            0.0);
}

TEST(Cost, ZeroTraceIsFree) {
  SystemModel m = noiseless(example1_model(4));
  m.leader_init = Distribution::zero(1);
  m.follower_init = Distribution::zero(1);
  const CostModel c = example1_cost(10);
  const SimulationTrace tr = simulate(m, c, gains_for(m, c), 10, 0);
  EXPECT_EQ(evaluate_cost_direct(tr, c), 0.0);
  EXPECT_EQ(evaluate_cost_decomposed(tr, c), 0.0);
}

TEST(Cost, IdentityAndDeviationResidualOnRandomTraces) {
  std::mt19937_64 rng(61);
  const std::array<int, 4> ns{1, 2, 5, 20};
  for (int trial = 0; trial < 40; ++trial) {
    const int dx = 1 + trial % 2;
    const int du = 1 + (trial / 2) % 2;
    const int n = ns[trial % 4];
    const SystemModel m = mflqr::testing::random_model(rng, dx, du, n);
    const CostModel c = mflqr::testing::random_cost(rng, dx, du, 6);
    const SimulationTrace tr = simulate(m, c, random_gains(rng, dx, du, 6), 6, trial);
    const double direct = evaluate_cost_direct(tr, c);
    const double decomposed = evaluate_cost_decomposed(tr, c);
    EXPECT_LE(std::abs(direct - decomposed), 1e-10 * std::abs(direct));
    const double res = deviation_residual(tr, m);
    EXPECT_LT(res, 1e-10);
    if (n == 1) EXPECT_EQ(res, 0.0);
  }
}

TEST(Cost, DiscountWeightsOnlyForInfiniteHorizon) {
  const SystemModel m = example1_model(5);
  const CostModel fin = example1_cost(10);
  CostModel inf = example1_cost_infinite(0.5);
  const SimulationTrace tr = simulate(m, fin, gains_for(m, fin), 10, 3);
  double expect = 0.0, w = 1.0;
  for (double s : tr.stage_cost) {
    expect += w * s;
    w *= 0.5;
  }
  EXPECT_NEAR(evaluate_cost_direct(tr, inf), expect, 1e-12 * expect);
  EXPECT_NEAR(evaluate_cost_decomposed(tr, inf), expect, 1e-10 * expect);
  double plain = 0.0;
  for (double s : tr.stage_cost) plain += s;
  EXPECT_NEAR(evaluate_cost_direct(tr, fin), plain, 1e-12 * plain);
}

TEST(Cost, SingleFollowerIsAugmentedQuadratic) {
  const SystemModel m = example1_model(1);
  const CostModel c = example1_cost(6);
  const SimulationTrace tr = simulate(m, c, gains_for(m, c), 6, 8);
  const AugmentedSystem aug = build_augmented(m, c, 1);
  double expect = 0.0;
  for (int k = 0; k < 6; ++k) {
    VectorXd z(2), v(2);
    z << tr.x0[k], tr.X[k].row(0).transpose();
    v << tr.u0[k], tr.U[k].row(0).transpose();
    expect += z.dot(aug.Q_bar * z) + v.dot(aug.R_bar * v);
  }
  EXPECT_NEAR(evaluate_cost_decomposed(tr, c), expect, 1e-12 * expect);
  EXPECT_NEAR(evaluate_cost_direct(tr, c), expect, 1e-10 * expect);
}

TEST(DeviationResidual, HandBuiltTwoAgentStep) {
  SystemModel m = example1_model(2);
  m.A = scalar(0.5);
  m.B = scalar(2.0);
  SimulationTrace tr;
  tr.T = 1;
  tr.n = 2;
  tr.dx = tr.du = 1;
  MatrixXd X0(2, 1), U0(2, 1), W0(2, 1), X1(2, 1);
  X0 << 1.0, 3.0;    // deviations -1, 1
  U0 << 0.25, 0.75;  // deviations -0.25, 0.25
  W0 << 0.0, 0.5;    // deviations -0.25, 0.25
  // next deviations: 0.5 * (-1) + 2 * (-0.25) - 0.25 = -1.25, and +1.25
  X1 << 10.0 - 1.25, 10.0 + 1.25;
  tr.X = {X0, X1};
  tr.U = {U0};
  tr.W = {W0};
  EXPECT_EQ(deviation_residual(tr, m), 0.0);
  tr.X[1](0, 0) += 0.125;
  EXPECT_NEAR(deviation_residual(tr, m), 0.0625, 1e-15);
}
