#pragma once

// Shared models and random generators for the test suites.

#include <random>

#include "mflqr/model.hpp"

namespace mflqr::testing {

// The 100-follower example: scalar dynamics and weights.
inline SystemModel example1_model(int n = 100) {
  SystemModel m;
  m.n = n;
  m.A0 = scalar(1.0);
  m.B0 = scalar(0.3);
  m.D0 = scalar(0.05);
  m.A = scalar(1.0);
  m.B = scalar(0.2);
  m.D = scalar(0.01);
  m.E = scalar(0.01);
  m.leader_init = Distribution::point(VectorXd::Constant(1, 30.0));
  m.follower_init = Distribution::uniform(VectorXd::Zero(1), VectorXd::Constant(1, 20.0));
  m.noise.leader = Distribution::gaussian(scalar(0.1));
  m.noise.follower = Distribution::gaussian(scalar(0.2));
  return m;
}

inline CostModel example1_cost(int T = 80) {
  CostModel c;
  c.Q0 = scalar(1.0);
  c.R0 = scalar(100.0);
  c.Q = scalar(0.1);
  c.P = scalar(50.0);
  c.R = scalar(50.0);
  c.H = scalar(1.0);
  c.horizon = HorizonKind::Finite;
  c.T = T;
  return c;
}

inline CostModel example1_cost_infinite(double beta = 1.0) {
  CostModel c = example1_cost();
  c.horizon = HorizonKind::Infinite;
  c.T = 0;
  c.beta = beta;
  return c;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols,
                              double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

inline MatrixXd random_psd(std::mt19937_64& rng, int d, double scale = 1.0) {
  const MatrixXd g = random_matrix(rng, d, d);
  return scale * g.transpose() * g;
}

inline MatrixXd random_pd(std::mt19937_64& rng, int d, double scale = 1.0) {
  return random_psd(rng, d, scale) + scale * 0.2 * MatrixXd::Identity(d, d);
}

// A random model satisfying the positivity assumptions (symmetric weights,
// Q, P, H, Q0 PSD; R0, R PD). Dynamics are kept near the unit circle.
inline SystemModel random_model(std::mt19937_64& rng, int dx, int du, int n) {
  SystemModel m;
  m.n = n;
  m.A0 = random_matrix(rng, dx, dx, -1.1, 1.1);
  m.B0 = random_matrix(rng, dx, du);
  m.D0 = random_matrix(rng, dx, dx, -0.2, 0.2);
  m.A = random_matrix(rng, dx, dx, -1.1, 1.1);
  m.B = random_matrix(rng, dx, du);
  m.D = random_matrix(rng, dx, dx, -0.2, 0.2);
  m.E = random_matrix(rng, dx, dx, -0.2, 0.2);
  m.leader_init = Distribution::gaussian(random_matrix(rng, dx, 1, -2.0, 2.0),
                                         0.5 * MatrixXd::Identity(dx, dx));
  m.follower_init = Distribution::uniform(VectorXd::Constant(dx, -1.0),
                                          VectorXd::Constant(dx, 1.0));
  m.noise.leader = Distribution::gaussian(random_psd(rng, dx, 0.1));
  m.noise.follower = Distribution::uniform(VectorXd::Constant(dx, -0.3),
                                           VectorXd::Constant(dx, 0.3));
  return m;
}

inline CostModel random_cost(std::mt19937_64& rng, int dx, int du, int T) {
  CostModel c;
  c.Q0 = random_psd(rng, dx);
  c.Q = random_psd(rng, dx);
  c.P = random_psd(rng, dx, 2.0);
  c.H = random_psd(rng, dx);
  c.R0 = random_pd(rng, du);
  c.R = random_pd(rng, du);
  c.horizon = HorizonKind::Finite;
  c.T = T;
  return c;
}

}  // namespace mflqr::testing
