#include "mflqr/gains.hpp"

#include <string>

#include "mflqr/errors.hpp"

namespace mflqr {

namespace {

constexpr double kInnerRcond = 1e-14;
constexpr double kGainRcond = 1e-12;

double reciprocal_condition(const MatrixXd& m) {
  if (m.rows() != m.cols() || m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

}  // namespace

GainSchedule GainSchedule::finite(std::vector<MatrixXd> dev,
                                  std::vector<MatrixXd> bar, bool leaderless) {
  if (dev.empty() || dev.size() != bar.size()) {
    throw DimensionMismatch("gain schedule needs matching, non-empty sequences");
  }
  GainSchedule g;
  g.dev_ = std::move(dev);
  g.bar_ = std::move(bar);
  g.leaderless_ = leaderless;
  return g;
}

GainSchedule GainSchedule::stationary(MatrixXd dev, MatrixXd bar,
                                      bool leaderless) {
  GainSchedule g;
  g.dev_ = {std::move(dev)};
  g.bar_ = {std::move(bar)};
  g.stationary_ = true;
  g.leaderless_ = leaderless;
  return g;
}

std::size_t GainSchedule::index(int t) const {
  if (stationary_) return 0;
  if (t < 1 || t > horizon()) {
    throw DimensionMismatch("gain index t = " + std::to_string(t) +
                            " outside 1.." + std::to_string(horizon()));
  }
  return static_cast<std::size_t>(t - 1);
}

const MatrixXd& GainSchedule::dev(int t) const { return dev_[index(t)]; }
const MatrixXd& GainSchedule::bar(int t) const { return bar_[index(t)]; }

MatrixXd GainSchedule::L11(int t) const {
  if (leaderless_) throw LeaderlessMode("no leader gain in leaderless mode");
  return bar(t).topLeftCorner(du(), dx());
}

MatrixXd GainSchedule::L12(int t) const {
  if (leaderless_) throw LeaderlessMode("no leader gain in leaderless mode");
  return bar(t).topRightCorner(du(), dx());
}

MatrixXd GainSchedule::L21(int t) const {
  return bar(t).bottomLeftCorner(du(), dx());
}

MatrixXd GainSchedule::L22(int t) const {
  return bar(t).bottomRightCorner(du(), dx());
}

MatrixXd feedback_gain(const MatrixXd& M, const MatrixXd& A, const MatrixXd& B,
                       const MatrixXd& R, double beta) {
  const MatrixXd MB = M * B;
  const MatrixXd inner = symmetrized(B.transpose() * MB + R / beta);
  const Eigen::LLT<MatrixXd> llt(inner);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (!(rcond >= kInnerRcond)) {
    throw SingularInnerMatrix("gain inner matrix is not numerically positive "
                              "definite",
                              rcond);
  }
  return -llt.solve(MB.transpose() * A);
}

GainSchedule compute_gains(const RiccatiSolution& riccati,
                           const SystemModel& model, const CostModel& cost) {
  const Dims d = dims(model, cost);
  if (riccati.is_stationary() != cost.infinite()) {
    throw DimensionMismatch("Riccati solution horizon does not match the cost");
  }
  if (riccati.dev_dimension() != d.dx || riccati.aug_dimension() != 2 * d.dx) {
    throw DimensionMismatch("Riccati solution dimensions do not match the model");
  }
  if (riccati.is_stationary()) {
    const AugmentedSystem sys = build_augmented(model, cost, 1);
    const double beta = riccati.beta();
    return GainSchedule::stationary(
        feedback_gain(riccati.dev(1), model.A.at(1), model.B.at(1), sys.R_dev, beta),
        feedback_gain(riccati.aug(1), sys.A_bar, sys.B_bar, sys.R_bar, beta),
        sys.leaderless);
  }
  const int T = riccati.horizon();
  if (T != *d.T) throw DimensionMismatch("Riccati horizon does not match T");
  std::vector<MatrixXd> dev(static_cast<std::size_t>(T));
  std::vector<MatrixXd> bar(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const AugmentedSystem sys = build_augmented(model, cost, t);
    const std::size_t k = static_cast<std::size_t>(t - 1);
    dev[k] = feedback_gain(riccati.dev(t + 1), model.A.at(t), model.B.at(t), sys.R_dev);
    bar[k] = feedback_gain(riccati.aug(t + 1), sys.A_bar, sys.B_bar, sys.R_bar);
  }
  return GainSchedule::finite(std::move(dev), std::move(bar),
                              riccati.leaderless());
}

VectorXd leader_action(const GainSchedule& g, int t, const VectorXd& x0,
                       const VectorXd& xbar) {
  return g.L11(t) * x0 + g.L12(t) * xbar;
}

VectorXd follower_action(const GainSchedule& g, int t, const VectorXd& xi,
                         const VectorXd& x0, const VectorXd& xbar) {
  const MatrixXd& Ld = g.dev(t);
  return Ld * xi + g.L21(t) * x0 + (g.L22(t) - Ld) * xbar;
}

const ConsensusStep& ConsensusForm::at(int t) const {
  if (stationary) return steps.front();
  if (t < 1 || t > static_cast<int>(steps.size())) {
    throw DimensionMismatch("consensus index t = " + std::to_string(t));
  }
  return steps[static_cast<std::size_t>(t - 1)];
}

ConsensusForm consensus_coefficients(const GainSchedule& g, int n,
                                     std::optional<int> last_t) {
  if (n < 1) throw DimensionMismatch("n must be >= 1");
  ConsensusForm form;
  form.n = n;
  form.stationary = g.is_stationary();
  form.leaderless = g.leaderless();
  int steps = g.is_stationary() ? 1 : g.horizon();
  if (last_t && !g.is_stationary()) {
    if (*last_t < 1 || *last_t > steps) {
      throw DimensionMismatch("consensus range 1.." + std::to_string(*last_t) +
                              " outside the schedule");
    }
    steps = *last_t;
  }
  const double inv_n = 1.0 / n;
  for (int t = 1; t <= steps; ++t) {
    const MatrixXd& Ld = g.dev(t);
    if (reciprocal_condition(Ld) < kGainRcond) {
      throw SingularGain("deviation gain is not invertible at t = " +
                             std::to_string(t),
                         t);
    }
    ConsensusStep s;
    const Eigen::PartialPivLU<MatrixXd> dev_lu(Ld);
    const MatrixXd L21 = g.L21(t);
    s.gamma = inv_n * Ld;
    s.mu = -dev_lu.solve(g.L22(t) + L21 - Ld);
    s.lambda = inv_n * L21;
    if (!g.leaderless()) {
      const MatrixXd L11 = g.L11(t);
      if (reciprocal_condition(L11) < kGainRcond) {
        throw SingularGain("leader gain L11 is not invertible at t = " +
                               std::to_string(t),
                           t);
      }
      s.alpha = inv_n * L11;
      s.beta = -Eigen::PartialPivLU<MatrixXd>(L11).solve(g.L12(t));
    }
    form.steps.push_back(std::move(s));
  }
  return form;
}

VectorXd consensus_leader_action(const ConsensusForm& form, int t,
                                 const VectorXd& x0, const MatrixXd& followers) {
  if (form.leaderless) throw LeaderlessMode("no leader control in leaderless mode");
  const ConsensusStep& s = form.at(t);
  VectorXd u = VectorXd::Zero(s.alpha.rows());
  for (Eigen::Index i = 0; i < followers.rows(); ++i) {
    u += s.alpha * (x0 - s.beta * followers.row(i).transpose());
  }
  return u;
}

VectorXd consensus_follower_action(const ConsensusForm& form, int t,
                                   const VectorXd& xi, const VectorXd& x0,
                                   const MatrixXd& followers) {
  const ConsensusStep& s = form.at(t);
  VectorXd u = VectorXd::Zero(s.gamma.rows());
  for (Eigen::Index j = 0; j < followers.rows(); ++j) {
    const VectorXd xj = followers.row(j).transpose();
    u += s.gamma * (xi - s.mu * xj) + s.lambda * (x0 - xj);
  }
  return u;
}

}  // namespace mflqr
