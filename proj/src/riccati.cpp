#include "mflqr/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mflqr/errors.hpp"

namespace mflqr {

namespace {

constexpr double kInnerRcond = 1e-14;
constexpr double kValuePsdTol = 1e-8;

void assert_value_psd(const MatrixXd& M, const char* which, int t) {
  const double scale = std::max(1.0, spectral_norm_sym(M));
  const double lo = min_eigenvalue(M);
  if (lo < -kValuePsdTol * scale) {
    throw NotPSD(std::string(which) + " value matrix lost positive "
                 "semi-definiteness at t = " + std::to_string(t),
                 lo);
  }
}

}  // namespace

RiccatiSolution RiccatiSolution::finite(std::vector<MatrixXd> dev,
                                        std::vector<MatrixXd> aug,
                                        bool leaderless) {
  RiccatiSolution s;
  s.dev_ = std::move(dev);
  s.aug_ = std::move(aug);
  s.leaderless_ = leaderless;
  s.dev_diag_.converged = s.aug_diag_.converged = true;
  return s;
}

RiccatiSolution RiccatiSolution::stationary(AreSolution dev, AreSolution aug,
                                            double beta, bool leaderless) {
  RiccatiSolution s;
  s.dev_ = {std::move(dev.M)};
  s.aug_ = {std::move(aug.M)};
  s.dev_diag_ = dev.diagnostics;
  s.aug_diag_ = aug.diagnostics;
  s.beta_ = beta;
  s.stationary_ = true;
  s.leaderless_ = leaderless;
  return s;
}

const MatrixXd& RiccatiSolution::dev(int t) const {
  if (stationary_) return dev_.front();
  if (t < 1 || t > static_cast<int>(dev_.size())) {
    throw DimensionMismatch("Riccati index t = " + std::to_string(t) +
                            " outside 1.." + std::to_string(dev_.size()));
  }
  return dev_[static_cast<std::size_t>(t - 1)];
}

const MatrixXd& RiccatiSolution::aug(int t) const {
  if (stationary_) return aug_.front();
  if (t < 1 || t > static_cast<int>(aug_.size())) {
    throw DimensionMismatch("Riccati index t = " + std::to_string(t) +
                            " outside 1.." + std::to_string(aug_.size()));
  }
  return aug_[static_cast<std::size_t>(t - 1)];
}

MatrixXd backward_step(const MatrixXd& M_next, const MatrixXd& A,
                       const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
  if (A.rows() != A.cols() || M_next.rows() != A.rows() ||
      B.rows() != A.rows() || Q.rows() != A.rows() || R.rows() != B.cols()) {
    throw DimensionMismatch("backward_step: nonconforming shapes");
  }
  const MatrixXd MB = M_next * B;
  const MatrixXd inner = symmetrized(B.transpose() * MB + R);
  const Eigen::LLT<MatrixXd> llt(inner);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (!(rcond >= kInnerRcond)) {
    throw SingularInnerMatrix(
        "B^T M B + R is not numerically positive definite (rcond " +
            std::to_string(rcond) + ")",
        rcond);
  }
  const MatrixXd BtMA = MB.transpose() * A;
  return symmetrized(A.transpose() * M_next * A -
                     BtMA.transpose() * llt.solve(BtMA) + Q);
}

RiccatiSolution solve_finite(const SystemModel& model, const CostModel& cost) {
  const Dims d = dims(model, cost);
  if (cost.infinite()) throw DimensionMismatch("solve_finite needs a finite horizon");
  const int T = *d.T;
  const bool leaderless = is_leaderless(model, cost);

  std::vector<MatrixXd> dev(static_cast<std::size_t>(T + 1));
  std::vector<MatrixXd> aug(static_cast<std::size_t>(T + 1));
  dev[T] = MatrixXd::Zero(d.dx, d.dx);
  aug[T] = MatrixXd::Zero(2 * d.dx, 2 * d.dx);
  for (int t = T; t >= 1; --t) {
    const AugmentedSystem sys = build_augmented(model, cost, t);
    const std::size_t k = static_cast<std::size_t>(t - 1);
    dev[k] = backward_step(dev[k + 1], model.A.at(t), model.B.at(t), sys.Q_dev,
                           sys.R_dev);
    aug[k] = backward_step(aug[k + 1], sys.A_bar, sys.B_bar, sys.Q_bar,
                           sys.R_bar);
    assert_value_psd(dev[k], "deviation", t);
    assert_value_psd(aug[k], "augmented", t);
  }
  return RiccatiSolution::finite(std::move(dev), std::move(aug), leaderless);
}

AreSolution solve_are(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                      const MatrixXd& R, double beta,
                      const AreOptions& options) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw DimensionMismatch("discount beta must lie in (0, 1]");
  }
  const double sb = std::sqrt(beta);
  const MatrixXd As = sb * A;
  const MatrixXd Bs = sb * B;

  AreSolution out;
  MatrixXd M = MatrixXd::Zero(A.rows(), A.cols());
  double change = 0.0;
  for (long k = 1; k <= options.max_iterations; ++k) {
    MatrixXd next = backward_step(M, As, Bs, Q, R);
    change = norm_inf(next - M);
    const double scale = std::max(1.0, norm_inf(M));
    M = std::move(next);
    if (change < options.tolerance * scale) {
      out.diagnostics.iterations = k;
      out.diagnostics.converged = true;
      break;
    }
  }
  if (!out.diagnostics.converged) {
    throw NotConverged("ARE value iteration hit the cap of " +
                           std::to_string(options.max_iterations) +
                           " iterations (last change " + std::to_string(change) +
                           ")",
                       options.max_iterations, change);
  }
  assert_value_psd(M, "stationary", 0);
  out.diagnostics.residual = norm_inf(backward_step(M, As, Bs, Q, R) - M);
  out.M = std::move(M);
  return out;
}

RiccatiSolution solve_infinite(const SystemModel& model, const CostModel& cost,
                               const AreOptions& options) {
  dims(model, cost);
  if (!cost.infinite()) throw DimensionMismatch("solve_infinite needs an infinite horizon");
  const AugmentedSystem sys = build_augmented(model, cost, 1);
  AreSolution dev = solve_are(model.A.at(1), model.B.at(1), sys.Q_dev,
                              sys.R_dev, cost.beta, options);
  AreSolution aug =
      solve_are(sys.A_bar, sys.B_bar, sys.Q_bar, sys.R_bar, cost.beta, options);
  return RiccatiSolution::stationary(std::move(dev), std::move(aug), cost.beta,
                                     sys.leaderless);
}

RiccatiSolution solve(const SystemModel& model, const CostModel& cost) {
  return cost.infinite() ? solve_infinite(model, cost) : solve_finite(model, cost);
}

}  // namespace mflqr
