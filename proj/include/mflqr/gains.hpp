#pragma once

// Optimal strategies assembled from the two Riccati solutions:
//
//   u0 = L11 x0 + L12 xbar
//   ui = Ldev xi + L21 x0 + (L22 - Ldev) xbar
//
// Each follower needs only its own state plus the shared (x0, xbar).

#include <optional>
#include <vector>

#include "mflqr/riccati.hpp"

namespace mflqr {

class GainSchedule {
 public:
  // Finite horizon, one entry per t = 1..T. In leaderless mode `bar` holds
  // only the follower row (du x 2dx).
  static GainSchedule finite(std::vector<MatrixXd> dev, std::vector<MatrixXd> bar,
                             bool leaderless = false);
  static GainSchedule stationary(MatrixXd dev, MatrixXd bar,
                                 bool leaderless = false);

  bool is_stationary() const { return stationary_; }
  bool leaderless() const { return leaderless_; }
  int horizon() const { return stationary_ ? 0 : static_cast<int>(dev_.size()); }
  Eigen::Index dx() const { return dev_.front().cols(); }
  Eigen::Index du() const { return dev_.front().rows(); }

  const MatrixXd& dev(int t) const;
  const MatrixXd& bar(int t) const;

  // Blocks of the augmented gain, each du x dx. The leader row throws
  // LeaderlessMode when there is no leader channel.
  MatrixXd L11(int t) const;
  MatrixXd L12(int t) const;
  MatrixXd L21(int t) const;
  MatrixXd L22(int t) const;

 private:
  std::size_t index(int t) const;

  std::vector<MatrixXd> dev_;
  std::vector<MatrixXd> bar_;
  bool stationary_ = false;
  bool leaderless_ = false;
};

// Finite horizon: L_t from M_{t+1} for t = 1..T, so L_T = 0.
// Stationary: -(B^T M B + R / beta)^{-1} B^T M A for both systems.
GainSchedule compute_gains(const RiccatiSolution& riccati,
                           const SystemModel& model, const CostModel& cost);

// Feedback gain -(B^T M B + R / beta)^{-1} B^T M A (beta = 1 for finite).
MatrixXd feedback_gain(const MatrixXd& M, const MatrixXd& A, const MatrixXd& B,
                       const MatrixXd& R, double beta = 1.0);

VectorXd leader_action(const GainSchedule& g, int t, const VectorXd& x0,
                       const VectorXd& xbar);
VectorXd follower_action(const GainSchedule& g, int t, const VectorXd& xi,
                         const VectorXd& x0, const VectorXd& xbar);

// Coefficients of the equivalent consensus form
//
//   u0 = sum_i alpha (x0 - beta xi)
//   ui = sum_j gamma (xi - mu xj) + sum_j lambda (x0 - xj)
//
// Requires Ldev and L11 square and invertible at every covered step. A
// finite schedule has zero gains at t = T, so callers wanting the form on a
// finite horizon pass last_t = T - 1.
struct ConsensusStep {
  MatrixXd alpha;   // L11 / n             (du x dx), absent when leaderless
  MatrixXd beta;    // -L11^{-1} L12       (dx x dx), absent when leaderless
  MatrixXd gamma;   // Ldev / n            (du x dx)
  MatrixXd mu;      // -Ldev^{-1}(L22 + L21 - Ldev)   (dx x dx)
  MatrixXd lambda;  // L21 / n             (du x dx)
};

struct ConsensusForm {
  int n = 1;
  bool stationary = false;
  bool leaderless = false;
  std::vector<ConsensusStep> steps;

  const ConsensusStep& at(int t) const;
};

ConsensusForm consensus_coefficients(const GainSchedule& g, int n,
                                     std::optional<int> last_t = {});

// Controls evaluated literally from the pairwise consensus sums.
// `followers` holds one follower state per row (n x dx).
VectorXd consensus_leader_action(const ConsensusForm& form, int t,
                                 const VectorXd& x0, const MatrixXd& followers);
VectorXd consensus_follower_action(const ConsensusForm& form, int t,
                                   const VectorXd& xi, const VectorXd& x0,
                                   const MatrixXd& followers);

}  // namespace mflqr
