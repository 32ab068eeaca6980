#pragma once

// Brute-force centralized verifier. Stacks the leader and all followers
// into one (n+1) d_x system and solves the full LQR with its own plain
// Riccati code, sharing nothing with the mean-field path beyond the model
// types. Intended for small n only.

#include <vector>

#include "mflqr/gains.hpp"

namespace mflqr::oracle {

// Stacked state z = (x0, x1, ..., xn), control v = (u0, u1, ..., un).
// In leaderless mode the leader has no control and v = (u1, ..., un).
struct CentralizedProblem {
  int n = 0;
  int dx = 0;
  int du = 0;
  bool leaderless = false;
  HorizonKind horizon = HorizonKind::Finite;
  int T = 0;
  double beta = 1.0;
  MatrixSchedule A_c, B_c, Q_c, R_c;

  Eigen::Index state_size() const { return static_cast<Eigen::Index>(n + 1) * dx; }
  Eigen::Index control_size() const {
    return static_cast<Eigen::Index>(leaderless ? n : n + 1) * du;
  }
};

constexpr int kMaxStateSize = 200;

// Throws TooLarge when (n+1) d_x > 200. `n` overrides model.n.
CentralizedProblem build_centralized(const SystemModel& model,
                                     const CostModel& cost, int n);

// Gain sequence u = K_t z. Stationary problems hold a single entry.
struct CentralizedGains {
  std::vector<MatrixXd> K;
  bool stationary = false;
  const MatrixXd& at(int t) const;
};

// Backward Riccati from a zero terminal value (finite), or value iteration
// on the sqrt(beta)-scaled system (infinite).
CentralizedGains solve_centralized(const CentralizedProblem& cp);

// The mean-field per-agent strategies written as one stacked feedback.
CentralizedGains assemble_meanfield_as_centralized(const GainSchedule& gains,
                                                   int n);

// max_t max_ij |K_central(t) - K_mf(t)|
double compare(const CentralizedGains& central, const CentralizedGains& mf);

// First and second moments of the stacked initial state and noise.
struct StackedMoments {
  VectorXd init_mean;
  MatrixXd init_cov;
  MatrixXd noise_cov;
};
StackedMoments stacked_moments(const SystemModel& model, int n);

// Exact E[sum_t beta^{t-1} (z' Q_c z + v' R_c v)] for v = K_t z over
// t = 1..T, by propagating S_{t+1} = F S_t F' + W with F = A_c + B_c K_t.
double expected_cost(const CentralizedProblem& cp, const CentralizedGains& K,
                     const VectorXd& init_mean, const MatrixXd& init_cov,
                     const MatrixXd& noise_cov, int T, double beta);

}  // namespace mflqr::oracle
