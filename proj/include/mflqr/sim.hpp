#pragma once

// Seeded closed-loop simulation of the leader and n followers, plus two
// independent evaluations of the realized cost.

#include <cstdint>
#include <vector>

#include "mflqr/gains.hpp"

namespace mflqr {

// Counter-based random stream. Every (seed, agent, t) triple names its own
// stream, so a draw never depends on iteration order or on n. Agent 0 is
// the leader, followers are 1..n; t = 0 is used for initial states.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t agent, std::uint64_t t);

  std::uint64_t next_u64();
  double uniform();  // in (0, 1)
  double normal();   // standard normal, Box-Muller

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Draw from `dist`; `sqrt_cov` is the symmetric square root of a Gaussian
// covariance (ignored for other kinds).
VectorXd draw(const Distribution& dist, const MatrixXd& sqrt_cov,
              NoiseStream& stream);

// Index k of every per-time vector corresponds to t = k + 1. States are
// stored for t = 1..T+1, actions and noise for t = 1..T.
struct SimulationTrace {
  int T = 0;
  int n = 0;
  int dx = 0;
  int du = 0;
  bool leaderless = false;
  std::vector<VectorXd> x0;    // leader state
  std::vector<VectorXd> u0;    // leader action
  std::vector<MatrixXd> X;     // follower states, n x dx
  std::vector<MatrixXd> U;     // follower actions, n x du
  std::vector<VectorXd> xbar;  // mean of the rows of X
  std::vector<VectorXd> w0;    // leader noise
  std::vector<MatrixXd> W;     // follower noise, n x dx
  std::vector<double> mean_abs_dev;  // (1/n) sum_i ||xi - x0||_2, t = 1..T
  std::vector<double> stage_cost;    // undiscounted stage cost, t = 1..T
};

// Runs t = 1..T. Finite gain schedules must cover T; stationary ones apply
// at every step. Throws Diverged when any state exceeds 1e12 in magnitude.
SimulationTrace simulate(const SystemModel& model, const CostModel& cost,
                         const GainSchedule& gains, int T, std::uint64_t seed);

// The bracketed stage cost written term by term, pairwise sum included.
double stage_cost_direct(const CostModel& cost, int t, const VectorXd& x0,
                         const VectorXd& u0, const MatrixXd& X,
                         const MatrixXd& U);

// Sum over t of beta^{t-1} times the direct stage cost (beta = 1 for a
// finite horizon).
double evaluate_cost_direct(const SimulationTrace& trace, const CostModel& cost);

// Same quantity through the (x0, xbar) / deviation split: quadratic forms in
// Q_bar and R_bar plus the follower average of deviation terms weighted by
// Q+P+H and R.
double evaluate_cost_decomposed(const SimulationTrace& trace,
                                const CostModel& cost);

// max over i, t of ||dx_{t+1} - A dx_t - B du_t - dw_t||_inf where d* is
// the deviation of follower i from the follower average.
double deviation_residual(const SimulationTrace& trace, const SystemModel& model);

}  // namespace mflqr
