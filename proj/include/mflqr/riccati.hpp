#pragma once

// Riccati recursions for the two low-dimensional problems: the deviation
// system (A, B, Q+P+H, R) of size d_x and the augmented (leader, mean-field)
// system of size 2 d_x. Neither depends on the number of followers.

#include <vector>

#include "mflqr/model.hpp"

namespace mflqr {

struct AreDiagnostics {
  long iterations = 0;
  double residual = 0.0;  // ||RHS(M) - M||_inf at the returned M
  bool converged = false;
};

struct AreSolution {
  MatrixXd M;
  AreDiagnostics diagnostics;
};

class RiccatiSolution {
 public:
  // Finite horizon: entries for t = 1..T+1, the last one zero.
  static RiccatiSolution finite(std::vector<MatrixXd> dev,
                                std::vector<MatrixXd> aug, bool leaderless);
  static RiccatiSolution stationary(AreSolution dev, AreSolution aug,
                                    double beta, bool leaderless);

  bool is_stationary() const { return stationary_; }
  bool leaderless() const { return leaderless_; }
  // Horizon length (0 for stationary solutions).
  int horizon() const { return stationary_ ? 0 : static_cast<int>(dev_.size()) - 1; }
  double beta() const { return beta_; }

  // Value matrices at t in 1..T+1 (any t for a stationary solution).
  const MatrixXd& dev(int t) const;
  const MatrixXd& aug(int t) const;

  const AreDiagnostics& dev_diagnostics() const { return dev_diag_; }
  const AreDiagnostics& aug_diagnostics() const { return aug_diag_; }

  // Dimensions the solver worked in; d_x and 2 d_x regardless of n.
  Eigen::Index dev_dimension() const { return dev_.front().rows(); }
  Eigen::Index aug_dimension() const { return aug_.front().rows(); }

 private:
  std::vector<MatrixXd> dev_;
  std::vector<MatrixXd> aug_;
  AreDiagnostics dev_diag_;
  AreDiagnostics aug_diag_;
  double beta_ = 1.0;
  bool stationary_ = false;
  bool leaderless_ = false;
};

// One step of the Riccati difference equation,
//   A^T M A - A^T M B (B^T M B + R)^{-1} B^T M A + Q,
// using a Cholesky solve. Throws SingularInnerMatrix when the inner matrix
// is not numerically positive definite (reciprocal condition < 1e-14).
MatrixXd backward_step(const MatrixXd& M_next, const MatrixXd& A,
                       const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R);

// Backward recursion for both systems from M_{T+1} = 0.
RiccatiSolution solve_finite(const SystemModel& model, const CostModel& cost);

// Stationary solution of the beta-discounted ARE. The problem is mapped to
// the undiscounted one on (sqrt(beta) A, sqrt(beta) B) and solved by value
// iteration from M = 0 until ||M_{k+1} - M_k||_inf < tol max(1, ||M_k||_inf).
struct AreOptions {
  double tolerance = 1e-12;
  long max_iterations = 100000;
};
AreSolution solve_are(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                      const MatrixXd& R, double beta,
                      const AreOptions& options = {});

// Both AREs for a time-invariant model.
RiccatiSolution solve_infinite(const SystemModel& model, const CostModel& cost,
                               const AreOptions& options = {});

// Dispatches on cost.horizon.
RiccatiSolution solve(const SystemModel& model, const CostModel& cost);

}  // namespace mflqr
