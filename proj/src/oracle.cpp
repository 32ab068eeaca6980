#include "mflqr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mflqr/errors.hpp"

namespace mflqr::oracle {

namespace {

int distinct_steps(const SystemModel& m, const CostModel& c) {
  int len = 1;
  for (const MatrixSchedule* s :
       {&m.A0, &m.B0, &m.D0, &m.A, &m.B, &m.D, &m.E, &c.Q0, &c.R0, &c.Q, &c.P,
        &c.R, &c.H}) {
    len = std::max(len, s->length());
  }
  return len;
}

MatrixSchedule as_schedule(std::vector<MatrixXd> steps) {
  if (steps.size() == 1) return MatrixSchedule(std::move(steps.front()));
  return MatrixSchedule::sequence(std::move(steps));
}

}  // namespace

const MatrixXd& CentralizedGains::at(int t) const {
  if (stationary) return K.front();
  if (t < 1 || t > static_cast<int>(K.size())) {
    throw DimensionMismatch("centralized gain index t = " + std::to_string(t));
  }
  return K[static_cast<std::size_t>(t - 1)];
}

CentralizedProblem build_centralized(const SystemModel& model,
                                     const CostModel& cost, int n) {
  SystemModel sized = model;
  sized.n = n;
  const Dims d = dims(sized, cost);
  if ((n + 1) * d.dx > kMaxStateSize) {
    throw TooLarge("centralized state size " + std::to_string((n + 1) * d.dx) +
                   " exceeds " + std::to_string(kMaxStateSize));
  }
  CentralizedProblem cp;
  cp.n = n;
  cp.dx = d.dx;
  cp.du = d.du;
  cp.leaderless = is_leaderless(model, cost);
  cp.horizon = cost.horizon;
  cp.T = cost.infinite() ? 0 : cost.T;
  cp.beta = cost.infinite() ? cost.beta : 1.0;

  const int dx = d.dx;
  const int du = d.du;
  const Eigen::Index N = cp.state_size();
  const Eigen::Index M = cp.control_size();
  const double inv_n = 1.0 / n;
  const int lead_u = cp.leaderless ? 0 : du;

  std::vector<MatrixXd> As, Bs, Qs, Rs;
  const int steps = distinct_steps(model, cost);
  for (int t = 1; t <= steps; ++t) {
    MatrixXd A = MatrixXd::Zero(N, N);
    MatrixXd B = MatrixXd::Zero(N, M);
    MatrixXd Q = MatrixXd::Zero(N, N);
    MatrixXd R = MatrixXd::Zero(M, M);

    A.block(0, 0, dx, dx) = model.A0.at(t);
    for (int j = 1; j <= n; ++j) A.block(0, j * dx, dx, dx) = inv_n * model.D0.at(t);
    for (int i = 1; i <= n; ++i) {
      A.block(i * dx, 0, dx, dx) = model.E.at(t);
      for (int j = 1; j <= n; ++j) {
        A.block(i * dx, j * dx, dx, dx) = inv_n * model.D.at(t);
      }
      A.block(i * dx, i * dx, dx, dx) += model.A.at(t);
    }

    if (!cp.leaderless) {
      B.block(0, 0, dx, du) = model.B0.at(t);
      R.block(0, 0, du, du) = symmetrized(cost.R0.at(t));
    }
    for (int i = 1; i <= n; ++i) {
      B.block(i * dx, lead_u + (i - 1) * du, dx, du) = model.B.at(t);
      R.block(lead_u + (i - 1) * du, lead_u + (i - 1) * du, du, du) =
          inv_n * symmetrized(cost.R.at(t));
    }

    // x0'Q0x0 + (1/n) sum_i [xi'Q xi + (xi-x0)'P(xi-x0)]
    //   + (1/2n^2) sum_ij (xi-xj)'H(xi-xj)
    // where the pairwise sum equals (1/n) sum_i xi'H xi - xbar'H xbar.
    const MatrixXd Q0 = symmetrized(cost.Q0.at(t));
    const MatrixXd Qf = symmetrized(cost.Q.at(t));
    const MatrixXd P = symmetrized(cost.P.at(t));
    const MatrixXd H = symmetrized(cost.H.at(t));
    Q.block(0, 0, dx, dx) = Q0 + P;
    for (int i = 1; i <= n; ++i) {
      Q.block(0, i * dx, dx, dx) = -inv_n * P;
      Q.block(i * dx, 0, dx, dx) = -inv_n * P;
      for (int j = 1; j <= n; ++j) {
        Q.block(i * dx, j * dx, dx, dx) = -(inv_n * inv_n) * H;
      }
      Q.block(i * dx, i * dx, dx, dx) += inv_n * (Qf + P + H);
    }
    As.push_back(std::move(A));
    Bs.push_back(std::move(B));
    Qs.push_back(std::move(Q));
    Rs.push_back(std::move(R));
  }
  cp.A_c = as_schedule(std::move(As));
  cp.B_c = as_schedule(std::move(Bs));
  cp.Q_c = as_schedule(std::move(Qs));
  cp.R_c = as_schedule(std::move(Rs));
  return cp;
}

CentralizedGains solve_centralized(const CentralizedProblem& cp) {
  const Eigen::Index N = cp.state_size();
  CentralizedGains out;
  auto gain = [](const MatrixXd& M, const MatrixXd& A, const MatrixXd& B,
                 const MatrixXd& R) -> MatrixXd {
    const MatrixXd S = B.transpose() * M * B + R;
    return -S.partialPivLu().solve(B.transpose() * M * A);
  };
  // Joseph-form update M = Q + K'RK + (A+BK)'M(A+BK).
  auto update = [](const MatrixXd& M, const MatrixXd& A, const MatrixXd& B,
                   const MatrixXd& Q, const MatrixXd& R, const MatrixXd& K) {
    const MatrixXd F = A + B * K;
    return MatrixXd(Q + K.transpose() * R * K + F.transpose() * M * F);
  };

  if (cp.horizon == HorizonKind::Finite) {
    out.K.resize(static_cast<std::size_t>(cp.T));
    MatrixXd M = MatrixXd::Zero(N, N);
    for (int t = cp.T; t >= 1; --t) {
      const MatrixXd& A = cp.A_c.at(t);
      const MatrixXd& B = cp.B_c.at(t);
      MatrixXd K = gain(M, A, B, cp.R_c.at(t));
      M = update(M, A, B, cp.Q_c.at(t), cp.R_c.at(t), K);
      out.K[static_cast<std::size_t>(t - 1)] = std::move(K);
    }
    return out;
  }

  const double sb = std::sqrt(cp.beta);
  const MatrixXd A = sb * cp.A_c.at(1);
  const MatrixXd B = sb * cp.B_c.at(1);
  const MatrixXd& Q = cp.Q_c.at(1);
  const MatrixXd& R = cp.R_c.at(1);
  MatrixXd M = MatrixXd::Zero(N, N);
  bool converged = false;
  double change = 0.0;
  long k = 0;
  for (; k < 100000 && !converged; ++k) {
    MatrixXd next = update(M, A, B, Q, R, gain(M, A, B, R));
    change = (next - M).cwiseAbs().maxCoeff();
    converged = change <= 1e-13 * std::max(1.0, M.cwiseAbs().maxCoeff());
    M = std::move(next);
  }
  if (!converged) {
    throw NotConverged("centralized value iteration did not converge", k, change);
  }
  out.K = {gain(M, A, B, R)};
  out.stationary = true;
  return out;
}

CentralizedGains assemble_meanfield_as_centralized(const GainSchedule& gains,
                                                   int n) {
  const Eigen::Index dx = gains.dx();
  const Eigen::Index du = gains.du();
  const bool leaderless = gains.leaderless();
  const Eigen::Index N = (n + 1) * dx;
  const Eigen::Index M = (leaderless ? n : n + 1) * du;
  const Eigen::Index lead_u = leaderless ? 0 : du;
  const double inv_n = 1.0 / n;

  CentralizedGains out;
  out.stationary = gains.is_stationary();
  const int steps = gains.is_stationary() ? 1 : gains.horizon();
  for (int t = 1; t <= steps; ++t) {
    MatrixXd K = MatrixXd::Zero(M, N);
    if (!leaderless) {
      K.block(0, 0, du, dx) = gains.L11(t);
      for (int j = 1; j <= n; ++j) K.block(0, j * dx, du, dx) = inv_n * gains.L12(t);
    }
    const MatrixXd& Ld = gains.dev(t);
    const MatrixXd shared = inv_n * (gains.L22(t) - Ld);
    for (int i = 1; i <= n; ++i) {
      const Eigen::Index row = lead_u + (i - 1) * du;
      K.block(row, 0, du, dx) = gains.L21(t);
      for (int j = 1; j <= n; ++j) K.block(row, j * dx, du, dx) = shared;
      K.block(row, i * dx, du, dx) += Ld;
    }
    out.K.push_back(std::move(K));
  }
  return out;
}

double compare(const CentralizedGains& central, const CentralizedGains& mf) {
  if (central.stationary != mf.stationary || central.K.size() != mf.K.size()) {
    throw DimensionMismatch("compare: gain sequences differ in length");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < central.K.size(); ++k) {
    if (central.K[k].rows() != mf.K[k].rows() ||
        central.K[k].cols() != mf.K[k].cols()) {
      throw DimensionMismatch("compare: gain shapes differ");
    }
    worst = std::max(worst, (central.K[k] - mf.K[k]).cwiseAbs().maxCoeff());
  }
  return worst;
}

StackedMoments stacked_moments(const SystemModel& model, int n) {
  const Eigen::Index dx = model.A.rows();
  const Eigen::Index N = (n + 1) * dx;
  StackedMoments m;
  m.init_mean = VectorXd::Zero(N);
  m.init_cov = MatrixXd::Zero(N, N);
  m.noise_cov = MatrixXd::Zero(N, N);
  m.init_mean.head(dx) = model.leader_init.expectation();
  m.init_cov.topLeftCorner(dx, dx) = model.leader_init.covariance();
  m.noise_cov.topLeftCorner(dx, dx) = model.noise.leader.covariance();
  const VectorXd fmean = model.follower_init.expectation();
  const MatrixXd fcov = model.follower_init.covariance();
  const MatrixXd wcov = model.noise.follower.covariance();
  for (int i = 1; i <= n; ++i) {
    m.init_mean.segment(i * dx, dx) = fmean;
    m.init_cov.block(i * dx, i * dx, dx, dx) = fcov;
    m.noise_cov.block(i * dx, i * dx, dx, dx) = wcov;
  }
  return m;
}

double expected_cost(const CentralizedProblem& cp, const CentralizedGains& K,
                     const VectorXd& init_mean, const MatrixXd& init_cov,
                     const MatrixXd& noise_cov, int T, double beta) {
  if (cp.state_size() > kMaxStateSize) throw TooLarge("expected_cost: state too large");
  MatrixXd S = init_cov + init_mean * init_mean.transpose();
  double total = 0.0;
  double weight = 1.0;
  for (int t = 1; t <= T; ++t) {
    const MatrixXd& Kt = K.at(t);
    const MatrixXd& R = cp.R_c.at(t);
    total += weight * ((cp.Q_c.at(t) + Kt.transpose() * R * Kt) * S).trace();
    const MatrixXd F = cp.A_c.at(t) + cp.B_c.at(t) * Kt;
    S = F * S * F.transpose() + noise_cov;
    weight *= beta;
  }
  return total;
}

}  // namespace mflqr::oracle
