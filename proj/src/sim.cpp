#include "mflqr/sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mflqr/errors.hpp"

namespace mflqr {

namespace {

constexpr double kDivergenceCap = 1e12;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool finite_and_bounded(const MatrixXd& m) {
  return m.allFinite() && (m.size() == 0 || m.cwiseAbs().maxCoeff() <= kDivergenceCap);
}

double discount(const CostModel& cost) { return cost.infinite() ? cost.beta : 1.0; }

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t agent,
                         std::uint64_t t) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ (agent * 0xd1b54a32d192ed03ULL));
  k = splitmix64(k ^ (t * 0xaef17502108ef2d9ULL));
  key_ = k;
}

std::uint64_t NoiseStream::next_u64() {
  ++counter_;
  return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double NoiseStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

VectorXd draw(const Distribution& dist, const MatrixXd& sqrt_cov,
              NoiseStream& stream) {
  switch (dist.kind) {
    case DistKind::Zero:
      return VectorXd::Zero(dist.dim);
    case DistKind::Point:
      return dist.mean;
    case DistKind::Gaussian: {
      VectorXd z(dist.dim);
      for (int i = 0; i < dist.dim; ++i) z(i) = stream.normal();
      return dist.mean + sqrt_cov * z;
    }
    case DistKind::Uniform: {
      VectorXd v(dist.dim);
      for (int i = 0; i < dist.dim; ++i) {
        v(i) = dist.low(i) + (dist.high(i) - dist.low(i)) * stream.uniform();
      }
      return v;
    }
  }
  return VectorXd::Zero(dist.dim);
}

double stage_cost_direct(const CostModel& cost, int t, const VectorXd& x0,
                         const VectorXd& u0, const MatrixXd& X,
                         const MatrixXd& U) {
  const MatrixXd& Q0 = cost.Q0.at(t);
  const MatrixXd& R0 = cost.R0.at(t);
  const MatrixXd& Q = cost.Q.at(t);
  const MatrixXd& P = cost.P.at(t);
  const MatrixXd& R = cost.R.at(t);
  const MatrixXd& H = cost.H.at(t);
  const Eigen::Index n = X.rows();

  double c = x0.dot(Q0 * x0) + u0.dot(R0 * u0);
  double followers = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd xi = X.row(i).transpose();
    const VectorXd ui = U.row(i).transpose();
    const VectorXd gap = xi - x0;
    followers += xi.dot(Q * xi) + gap.dot(P * gap) + ui.dot(R * ui);
  }
  c += followers / static_cast<double>(n);
  double pairwise = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const VectorXd diff = (X.row(i) - X.row(j)).transpose();
      pairwise += diff.dot(H * diff);
    }
  }
  c += pairwise / (2.0 * static_cast<double>(n) * static_cast<double>(n));
  return c;
}

SimulationTrace simulate(const SystemModel& model, const CostModel& cost,
                         const GainSchedule& gains, int T, std::uint64_t seed) {
  const Dims d = dims(model, cost);
  if (T < 1) throw DimensionMismatch("simulation horizon must be >= 1");
  if (!gains.is_stationary() && gains.horizon() < T) {
    throw DimensionMismatch("gain schedule covers " +
                            std::to_string(gains.horizon()) + " steps, need " +
                            std::to_string(T));
  }
  if (gains.dx() != d.dx || gains.du() != d.du) {
    throw DimensionMismatch("gain schedule dimensions do not match the model");
  }
  const int n = d.n;

  SimulationTrace tr;
  tr.T = T;
  tr.n = n;
  tr.dx = d.dx;
  tr.du = d.du;
  tr.leaderless = gains.leaderless();

  auto sqrt_of = [](const Distribution& dist) {
    return dist.kind == DistKind::Gaussian ? matrix_sqrt_psd(dist.cov) : MatrixXd();
  };
  const MatrixXd leader_init_sqrt = sqrt_of(model.leader_init);
  const MatrixXd follower_init_sqrt = sqrt_of(model.follower_init);
  const MatrixXd leader_noise_sqrt = sqrt_of(model.noise.leader);
  const MatrixXd follower_noise_sqrt = sqrt_of(model.noise.follower);

  VectorXd x0;
  {
    NoiseStream s(seed, 0, 0);
    x0 = draw(model.leader_init, leader_init_sqrt, s);
  }
  MatrixXd X(n, d.dx);
  for (int i = 0; i < n; ++i) {
    NoiseStream s(seed, static_cast<std::uint64_t>(i + 1), 0);
    X.row(i) = draw(model.follower_init, follower_init_sqrt, s).transpose();
  }

  tr.x0.reserve(T + 1);
  tr.X.reserve(T + 1);
  tr.xbar.reserve(T + 1);
  for (int t = 1; t <= T; ++t) {
    const VectorXd xbar = X.colwise().mean().transpose();
    tr.x0.push_back(x0);
    tr.X.push_back(X);
    tr.xbar.push_back(xbar);

    const VectorXd u0 = gains.leaderless() ? VectorXd::Zero(d.du)
                                           : leader_action(gains, t, x0, xbar);
    MatrixXd U(n, d.du);
    for (int i = 0; i < n; ++i) {
      U.row(i) = follower_action(gains, t, X.row(i).transpose(), x0, xbar).transpose();
    }

    VectorXd w0;
    {
      NoiseStream s(seed, 0, static_cast<std::uint64_t>(t));
      w0 = draw(model.noise.leader, leader_noise_sqrt, s);
    }
    MatrixXd W(n, d.dx);
    for (int i = 0; i < n; ++i) {
      NoiseStream s(seed, static_cast<std::uint64_t>(i + 1),
                    static_cast<std::uint64_t>(t));
      W.row(i) = draw(model.noise.follower, follower_noise_sqrt, s).transpose();
    }

    double dev_sum = 0.0;
    for (int i = 0; i < n; ++i) dev_sum += (X.row(i).transpose() - x0).norm();
    tr.mean_abs_dev.push_back(dev_sum / n);
    tr.stage_cost.push_back(stage_cost_direct(cost, t, x0, u0, X, U));

    const VectorXd next_x0 = model.A0.at(t) * x0 + model.B0.at(t) * u0 +
                             model.D0.at(t) * xbar + w0;
    const VectorXd shared = model.D.at(t) * xbar + model.E.at(t) * x0;
    MatrixXd next_X(n, d.dx);
    for (int i = 0; i < n; ++i) {
      next_X.row(i) = (model.A.at(t) * X.row(i).transpose() +
                       model.B.at(t) * U.row(i).transpose() + shared +
                       W.row(i).transpose())
                          .transpose();
    }

    tr.u0.push_back(u0);
    tr.U.push_back(std::move(U));
    tr.w0.push_back(std::move(w0));
    tr.W.push_back(std::move(W));

    if (!finite_and_bounded(next_x0) || !finite_and_bounded(next_X)) {
      throw Diverged("state magnitude exceeded 1e12 after step t = " +
                         std::to_string(t),
                     t);
    }
    x0 = next_x0;
    X = std::move(next_X);
  }
  tr.x0.push_back(x0);
  tr.xbar.push_back(X.colwise().mean().transpose());
  tr.X.push_back(std::move(X));
  return tr;
}

double evaluate_cost_direct(const SimulationTrace& trace, const CostModel& cost) {
  const double beta = discount(cost);
  double total = 0.0;
  double weight = 1.0;
  for (int t = 1; t <= trace.T; ++t) {
    const std::size_t k = static_cast<std::size_t>(t - 1);
    total += weight * stage_cost_direct(cost, t, trace.x0[k], trace.u0[k],
                                        trace.X[k], trace.U[k]);
    weight *= beta;
  }
  return total;
}

double evaluate_cost_decomposed(const SimulationTrace& trace,
                                const CostModel& cost) {
  const double beta = discount(cost);
  const int n = trace.n;
  double total = 0.0;
  double weight = 1.0;
  for (int t = 1; t <= trace.T; ++t) {
    const std::size_t k = static_cast<std::size_t>(t - 1);
    const MatrixXd Q_bar = augmented_state_weight(cost, t);
    const MatrixXd R_bar = augmented_control_weight(cost, t);
    const MatrixXd Q_dev = symmetrized(cost.Q.at(t) + cost.P.at(t) + cost.H.at(t));
    const MatrixXd R_dev = symmetrized(cost.R.at(t));

    const MatrixXd& X = trace.X[k];
    const MatrixXd& U = trace.U[k];
    const VectorXd xbar = X.colwise().mean().transpose();
    const VectorXd ubar = U.colwise().mean().transpose();

    VectorXd z(2 * trace.dx);
    z << trace.x0[k], xbar;
    VectorXd v(2 * trace.du);
    v << trace.u0[k], ubar;
    double stage = z.dot(Q_bar * z) + v.dot(R_bar * v);

    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      const VectorXd dx = X.row(i).transpose() - xbar;
      const VectorXd du = U.row(i).transpose() - ubar;
      dev += dx.dot(Q_dev * dx) + du.dot(R_dev * du);
    }
    stage += dev / n;
    total += weight * stage;
    weight *= beta;
  }
  return total;
}

double deviation_residual(const SimulationTrace& trace, const SystemModel& model) {
  double worst = 0.0;
  for (int t = 1; t <= trace.T; ++t) {
    const std::size_t k = static_cast<std::size_t>(t - 1);
    const MatrixXd& X = trace.X[k];
    const MatrixXd& X_next = trace.X[k + 1];
    const MatrixXd& U = trace.U[k];
    const MatrixXd& W = trace.W[k];
    const Eigen::RowVectorXd xbar = X.colwise().mean();
    const Eigen::RowVectorXd xbar_next = X_next.colwise().mean();
    const Eigen::RowVectorXd ubar = U.colwise().mean();
    const Eigen::RowVectorXd wbar = W.colwise().mean();
    const MatrixXd& A = model.A.at(t);
    const MatrixXd& B = model.B.at(t);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const VectorXd dev_next = (X_next.row(i) - xbar_next).transpose();
      const VectorXd dev = (X.row(i) - xbar).transpose();
      const VectorXd du = (U.row(i) - ubar).transpose();
      const VectorXd dw = (W.row(i) - wbar).transpose();
      const double r = (dev_next - A * dev - B * du - dw).cwiseAbs().maxCoeff();
      worst = std::max(worst, r);
    }
  }
  return worst;
}

}  // namespace mflqr
