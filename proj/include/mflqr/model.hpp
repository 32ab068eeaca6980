#pragma once

// Domain types for a leader + n-follower linear-quadratic network and the
// checks that certify a model is solvable.
//
// Leader:     x0' = A0 x0 + B0 u0 + D0 xbar + w0
// Follower i: xi' = A xi + B ui + D xbar + E x0 + wi
//
// where xbar is the mean of the follower states (the mean-field).

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflqr/linalg.hpp"

namespace mflqr {

// A matrix that is either constant over the horizon or given per time step.
// Time indices are 1-based, matching t = 1..T.
class MatrixSchedule {
 public:
  MatrixSchedule() = default;
  MatrixSchedule(MatrixXd constant) : steps_{std::move(constant)} {}  // NOLINT
  template <typename Derived>
  MatrixSchedule(const Eigen::MatrixBase<Derived>& constant)  // NOLINT
      : steps_{MatrixXd(constant)} {}
  static MatrixSchedule sequence(std::vector<MatrixXd> steps);

  const MatrixXd& at(int t) const;
  bool time_varying() const { return varying_; }
  // Number of stored steps (1 for constant schedules).
  int length() const { return static_cast<int>(steps_.size()); }
  bool empty() const { return steps_.empty(); }
  Eigen::Index rows() const { return steps_.empty() ? 0 : steps_[0].rows(); }
  Eigen::Index cols() const { return steps_.empty() ? 0 : steps_[0].cols(); }
  const std::vector<MatrixXd>& steps() const { return steps_; }

  // True iff every stored step is exactly zero.
  bool is_zero() const;

 private:
  std::vector<MatrixXd> steps_;
  bool varying_ = false;
};

enum class DistKind { Zero, Point, Gaussian, Uniform };

// Distribution over R^d. Point/Gaussian use `mean`; Gaussian uses `cov`;
// Uniform is per-coordinate on [low, high].
struct Distribution {
  DistKind kind = DistKind::Zero;
  int dim = 0;
  VectorXd mean;
  MatrixXd cov;
  VectorXd low;
  VectorXd high;

  static Distribution zero(int dim);
  static Distribution point(VectorXd value);
  static Distribution gaussian(MatrixXd cov);
  static Distribution gaussian(VectorXd mean, MatrixXd cov);
  static Distribution uniform(VectorXd low, VectorXd high);

  VectorXd expectation() const;
  MatrixXd covariance() const;
};

const char* to_string(DistKind kind);

struct NoiseModel {
  Distribution leader;
  Distribution follower;
  std::uint64_t seed = 0;
};

struct SystemModel {
  int n = 1;
  MatrixSchedule A0, B0, D0;
  MatrixSchedule A, B, D, E;
  Distribution leader_init;
  Distribution follower_init;
  NoiseModel noise;
};

enum class HorizonKind { Finite, Infinite };

struct CostModel {
  MatrixSchedule Q0, R0, Q, P, R, H;
  HorizonKind horizon = HorizonKind::Finite;
  int T = 1;          // finite horizon length
  double beta = 1.0;  // discount, infinite horizon only

  bool infinite() const { return horizon == HorizonKind::Infinite; }
};

struct Dims {
  int dx = 0;
  int du = 0;
  int n = 0;
  std::optional<int> T;
};

// Checks shapes of every matrix and distribution; throws DimensionMismatch.
Dims dims(const SystemModel& model, const CostModel& cost);

// B0 = 0, R0 = 0, D0 = 0 and Q0 = 0 at every step: the leader is an
// exogenous reference and has no control channel.
bool is_leaderless(const SystemModel& model, const CostModel& cost);

// Blocks over (x0, xbar). In leaderless mode the leader control column is
// removed, so B_bar is 2dx x du and R_bar is du x du.
struct AugmentedSystem {
  MatrixXd A_bar, B_bar, Q_bar, R_bar;
  MatrixXd Q_dev, R_dev;
  bool leaderless = false;
};

AugmentedSystem build_augmented(const SystemModel& model, const CostModel& cost,
                                int t);

// Q_bar and R_bar (always with the leader channel) from the weights alone.
MatrixXd augmented_state_weight(const CostModel& cost, int t);
MatrixXd augmented_control_weight(const CostModel& cost, int t);

struct PbhResult {
  bool ok = true;
  std::optional<std::complex<double>> witness;
};

// Discrete-time PBH test: rank [lambda I - A, B] = dx at every |lambda| >= 1.
PbhResult check_stabilizable(const MatrixXd& A, const MatrixXd& B);
// Dual PBH test on (A^T, C^T).
PbhResult check_detectable(const MatrixXd& A, const MatrixXd& C);

// Symmetric square root by spectral decomposition. Throws NotPSD when an
// eigenvalue is below -1e-10 * ||S||; small negatives are clipped.
MatrixXd matrix_sqrt_psd(const MatrixXd& S);

struct Check {
  Check() = default;
  explicit Check(std::string name_, bool passed_ = true, std::string detail_ = {})
      : name(std::move(name_)), passed(passed_), detail(std::move(detail_)) {}

  std::string name;
  bool passed = true;
  std::optional<double> witness;  // offending eigenvalue / PBH |lambda|
  std::optional<std::complex<double>> pbh_eigenvalue;
  int t = 0;  // first failing time step (0 when not time-indexed)
  std::string detail;
};

struct ValidationReport {
  std::vector<Check> checks;
  bool leaderless = false;
  std::vector<std::string> notes;

  bool all_passed() const;
  const Check* find(const std::string& name) const;
  const Check* first_failure() const;
};

// Assumption checks. Shape conflicts throw; failed conditions are reported.
ValidationReport validate(const SystemModel& model, const CostModel& cost);

}  // namespace mflqr
