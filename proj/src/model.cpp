#include "mflqr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mflqr/errors.hpp"

namespace mflqr {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kPdTol = 1e-14;
constexpr double kRankTol = 1e-10;
// Eigenvalues this close to the unit circle are treated as marginal, i.e.
// they must pass the rank test.
constexpr double kUnitCircleSlack = 1e-10;

std::string shape(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

void expect_shape(const MatrixSchedule& m, const char* name, Eigen::Index rows,
                  Eigen::Index cols) {
  if (m.empty()) {
    throw DimensionMismatch(std::string(name) + " is missing");
  }
  for (const auto& step : m.steps()) {
    if (step.rows() != rows || step.cols() != cols) {
      throw DimensionMismatch(std::string(name) + " is " +
                              shape(step.rows(), step.cols()) + ", expected " +
                              shape(rows, cols));
    }
  }
}

void expect_distribution(const Distribution& d, const char* name, int dx) {
  if (d.dim != dx) {
    throw DimensionMismatch(std::string(name) + " has dimension " +
                            std::to_string(d.dim) + ", expected " +
                            std::to_string(dx));
  }
  switch (d.kind) {
    case DistKind::Zero:
      break;
    case DistKind::Point:
      if (d.mean.size() != dx) throw DimensionMismatch(std::string(name) + " value size");
      break;
    case DistKind::Gaussian:
      if (d.mean.size() != dx || d.cov.rows() != dx || d.cov.cols() != dx) {
        throw DimensionMismatch(std::string(name) + " covariance is " +
                                shape(d.cov.rows(), d.cov.cols()));
      }
      break;
    case DistKind::Uniform:
      if (d.low.size() != dx || d.high.size() != dx) {
        throw DimensionMismatch(std::string(name) + " support size");
      }
      break;
  }
}

// Number of distinct time steps the assumption checks must visit.
int steps_to_check(const SystemModel& m, const CostModel& c) {
  int len = 1;
  for (const MatrixSchedule* s :
       {&m.A0, &m.B0, &m.D0, &m.A, &m.B, &m.D, &m.E, &c.Q0, &c.R0, &c.Q, &c.P,
        &c.R, &c.H}) {
    len = std::max(len, s->length());
  }
  return len;
}

int rank_with_tolerance(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTol * sv(0)) ++rank;
  }
  return rank;
}

}  // namespace

MatrixSchedule MatrixSchedule::sequence(std::vector<MatrixXd> steps) {
  MatrixSchedule s;
  s.steps_ = std::move(steps);
  s.varying_ = true;
  return s;
}

const MatrixXd& MatrixSchedule::at(int t) const {
  if (steps_.empty()) throw DimensionMismatch("empty matrix schedule");
  if (!varying_) return steps_.front();
  if (t < 1 || t > length()) {
    throw DimensionMismatch("time index " + std::to_string(t) +
                            " outside schedule of length " +
                            std::to_string(length()));
  }
  return steps_[static_cast<std::size_t>(t - 1)];
}

bool MatrixSchedule::is_zero() const {
  return std::all_of(steps_.begin(), steps_.end(),
                     [](const MatrixXd& m) { return m.isZero(0.0); });
}

Distribution Distribution::zero(int dim) {
  Distribution d;
  d.kind = DistKind::Zero;
  d.dim = dim;
  return d;
}

Distribution Distribution::point(VectorXd value) {
  Distribution d;
  d.kind = DistKind::Point;
  d.dim = static_cast<int>(value.size());
  d.mean = std::move(value);
  return d;
}

Distribution Distribution::gaussian(MatrixXd cov) {
  VectorXd mean = VectorXd::Zero(cov.rows());
  return gaussian(std::move(mean), std::move(cov));
}

Distribution Distribution::gaussian(VectorXd mean, MatrixXd cov) {
  Distribution d;
  d.kind = DistKind::Gaussian;
  d.dim = static_cast<int>(mean.size());
  d.mean = std::move(mean);
  d.cov = std::move(cov);
  return d;
}

Distribution Distribution::uniform(VectorXd low, VectorXd high) {
  Distribution d;
  d.kind = DistKind::Uniform;
  d.dim = static_cast<int>(low.size());
  d.low = std::move(low);
  d.high = std::move(high);
  return d;
}

VectorXd Distribution::expectation() const {
  switch (kind) {
    case DistKind::Zero:
      return VectorXd::Zero(dim);
    case DistKind::Point:
    case DistKind::Gaussian:
      return mean;
    case DistKind::Uniform:
      return 0.5 * (low + high);
  }
  return VectorXd::Zero(dim);
}

MatrixXd Distribution::covariance() const {
  switch (kind) {
    case DistKind::Zero:
    case DistKind::Point:
      return MatrixXd::Zero(dim, dim);
    case DistKind::Gaussian:
      return cov;
    case DistKind::Uniform: {
      const VectorXd width = high - low;
      return (width.array().square() / 12.0).matrix().asDiagonal();
    }
  }
  return MatrixXd::Zero(dim, dim);
}

const char* to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Zero:
      return "zero";
    case DistKind::Point:
      return "point";
    case DistKind::Gaussian:
      return "gaussian";
    case DistKind::Uniform:
      return "uniform";
  }
  return "?";
}

Dims dims(const SystemModel& model, const CostModel& cost) {
  if (model.A.empty() || model.B.empty()) {
    throw DimensionMismatch("follower matrices A and B are required");
  }
  Dims d;
  d.dx = static_cast<int>(model.A.rows());
  d.du = static_cast<int>(model.B.cols());
  d.n = model.n;
  if (d.dx < 1 || d.du < 1) throw DimensionMismatch("d_x and d_u must be >= 1");
  if (d.n < 1) throw DimensionMismatch("follower count n must be >= 1");

  expect_shape(model.A0, "A0", d.dx, d.dx);
  expect_shape(model.B0, "B0", d.dx, d.du);
  expect_shape(model.D0, "D0", d.dx, d.dx);
  expect_shape(model.A, "A", d.dx, d.dx);
  expect_shape(model.B, "B", d.dx, d.du);
  expect_shape(model.D, "D", d.dx, d.dx);
  expect_shape(model.E, "E", d.dx, d.dx);
  expect_shape(cost.Q0, "Q0", d.dx, d.dx);
  expect_shape(cost.Q, "Q", d.dx, d.dx);
  expect_shape(cost.P, "P", d.dx, d.dx);
  expect_shape(cost.H, "H", d.dx, d.dx);
  expect_shape(cost.R0, "R0", d.du, d.du);
  expect_shape(cost.R, "R", d.du, d.du);

  expect_distribution(model.leader_init, "leader initial state", d.dx);
  expect_distribution(model.follower_init, "follower initial state", d.dx);
  expect_distribution(model.noise.leader, "leader noise", d.dx);
  expect_distribution(model.noise.follower, "follower noise", d.dx);

  const std::pair<const MatrixSchedule*, const char*> all[] = {
      {&model.A0, "A0"}, {&model.B0, "B0"}, {&model.D0, "D0"}, {&model.A, "A"},
      {&model.B, "B"},   {&model.D, "D"},   {&model.E, "E"},   {&cost.Q0, "Q0"},
      {&cost.R0, "R0"},  {&cost.Q, "Q"},    {&cost.P, "P"},    {&cost.R, "R"},
      {&cost.H, "H"}};
  if (cost.infinite()) {
    for (const auto& [s, name] : all) {
      if (s->time_varying()) {
        throw DimensionMismatch(std::string(name) +
                                " is time-varying; infinite horizon needs "
                                "time-invariant matrices");
      }
    }
  } else {
    if (cost.T < 1) throw DimensionMismatch("horizon T must be >= 1");
    d.T = cost.T;
    for (const auto& [s, name] : all) {
      if (s->time_varying() && s->length() != cost.T) {
        throw DimensionMismatch(std::string(name) + " has " +
                                std::to_string(s->length()) +
                                " steps, expected T = " +
                                std::to_string(cost.T));
      }
    }
  }
  return d;
}

bool is_leaderless(const SystemModel& model, const CostModel& cost) {
  return model.B0.is_zero() && model.D0.is_zero() && cost.Q0.is_zero() &&
         cost.R0.is_zero();
}

MatrixXd augmented_state_weight(const CostModel& cost, int t) {
  const MatrixXd Q0 = symmetrized(cost.Q0.at(t));
  const MatrixXd Q = symmetrized(cost.Q.at(t));
  const MatrixXd P = symmetrized(cost.P.at(t));
  const Eigen::Index dx = Q.rows();
  MatrixXd Q_bar(2 * dx, 2 * dx);
  Q_bar << Q0 + P, -P, -P, Q + P;
  return Q_bar;
}

MatrixXd augmented_control_weight(const CostModel& cost, int t) {
  return block_diag(symmetrized(cost.R0.at(t)), symmetrized(cost.R.at(t)));
}

AugmentedSystem build_augmented(const SystemModel& model, const CostModel& cost,
                                int t) {
  AugmentedSystem aug;
  aug.leaderless = is_leaderless(model, cost);
  const MatrixXd& A0 = model.A0.at(t);
  const MatrixXd& D0 = model.D0.at(t);
  const MatrixXd& A = model.A.at(t);
  const MatrixXd& D = model.D.at(t);
  const MatrixXd& E = model.E.at(t);
  const MatrixXd& B = model.B.at(t);
  const Eigen::Index dx = A.rows();
  const Eigen::Index du = B.cols();

  aug.A_bar.resize(2 * dx, 2 * dx);
  aug.A_bar << A0, D0, E, A + D;

  aug.Q_bar = augmented_state_weight(cost, t);
  if (aug.leaderless) {
    aug.B_bar = MatrixXd::Zero(2 * dx, du);
    aug.B_bar.bottomRows(dx) = B;
    aug.R_bar = symmetrized(cost.R.at(t));
  } else {
    aug.B_bar = block_diag(model.B0.at(t), B);
    aug.R_bar = augmented_control_weight(cost, t);
  }
  aug.Q_dev = symmetrized(cost.Q.at(t) + cost.P.at(t) + cost.H.at(t));
  aug.R_dev = symmetrized(cost.R.at(t));
  return aug;
}

PbhResult check_stabilizable(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw DimensionMismatch("check_stabilizable: A is " +
                            shape(A.rows(), A.cols()) + ", B is " +
                            shape(B.rows(), B.cols()));
  }
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const std::complex<double> lambda = lambdas(i);
    if (std::abs(lambda) < 1.0 - kUnitCircleSlack) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) =
        lambda * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (rank_with_tolerance(pencil) < n) return {false, lambda};
  }
  return {true, std::nullopt};
}

PbhResult check_detectable(const MatrixXd& A, const MatrixXd& C) {
  if (A.rows() != A.cols() || C.cols() != A.cols()) {
    throw DimensionMismatch("check_detectable: A is " +
                            shape(A.rows(), A.cols()) + ", C is " +
                            shape(C.rows(), C.cols()));
  }
  return check_stabilizable(A.transpose(), C.transpose());
}

MatrixXd matrix_sqrt_psd(const MatrixXd& S) {
  if (S.rows() != S.cols()) throw DimensionMismatch("matrix_sqrt_psd: not square");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(S));
  const VectorXd& ev = es.eigenvalues();
  const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  const double lowest = ev.size() ? ev.minCoeff() : 0.0;
  if (lowest < -kPsdTol * scale) {
    throw NotPSD("matrix_sqrt_psd: eigenvalue " + std::to_string(lowest), lowest);
  }
  const VectorXd roots = ev.cwiseMax(0.0).cwiseSqrt();
  const MatrixXd& V = es.eigenvectors();
  return symmetrized(V * roots.asDiagonal() * V.transpose());
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.passed; });
}

const Check* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Check* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

ValidationReport validate(const SystemModel& model, const CostModel& cost) {
  const Dims d = dims(model, cost);
  ValidationReport report;
  report.leaderless = is_leaderless(model, cost);
  const int steps = steps_to_check(model, cost);

  // Symmetry of the six weights.
  const std::pair<const MatrixSchedule*, const char*> weights[] = {
      {&cost.Q0, "Q0"}, {&cost.R0, "R0"}, {&cost.Q, "Q"},
      {&cost.P, "P"},   {&cost.R, "R"},   {&cost.H, "H"}};
  for (const auto& [w, name] : weights) {
    Check c(std::string("symmetric:") + name);
    for (int t = 1; t <= steps && c.passed; ++t) {
      const MatrixXd& m = w->at(t);
      const double asym = asymmetry(m);
      if (asym > kSymmetryTol * std::max(1.0, max_abs(m))) {
        c.passed = false;
        c.witness = asym;
        c.t = t;
        c.detail = "max |W - W^T| exceeds 1e-12";
      }
    }
    report.checks.push_back(c);
  }

  auto psd_check = [&](const std::string& name, auto&& matrix_at) {
    Check c(name);
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= steps; ++t) {
      const MatrixXd m = matrix_at(t);
      const double lo = min_eigenvalue(m);
      worst = std::min(worst, lo);
      if (c.passed && lo < -kPsdTol * std::max(1.0, spectral_norm_sym(m))) {
        c.passed = false;
        c.witness = lo;
        c.t = t;
        c.detail = "negative eigenvalue";
      }
    }
    if (c.passed) c.witness = worst;
    report.checks.push_back(c);
    return c.passed;
  };
  auto pd_check = [&](const std::string& name, const MatrixSchedule& w) {
    Check c(name);
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= steps; ++t) {
      const MatrixXd& m = w.at(t);
      const double lo = min_eigenvalue(m);
      worst = std::min(worst, lo);
      if (c.passed && !(lo > kPdTol * std::max(1.0, spectral_norm_sym(m)))) {
        c.passed = false;
        c.witness = lo;
        c.t = t;
        c.detail = "not positive definite";
      }
    }
    if (c.passed) c.witness = worst;
    report.checks.push_back(c);
  };

  const bool dev_psd = psd_check("psd:Q+P+H", [&](int t) {
    return MatrixXd(cost.Q.at(t) + cost.P.at(t) + cost.H.at(t));
  });
  const bool aug_psd = psd_check(
      "psd:Q_bar", [&](int t) { return augmented_state_weight(cost, t); });
  if (report.leaderless) {
    report.checks.push_back(
        Check("pd:R0", true, "skipped: leaderless mode (B0 = D0 = Q0 = R0 = 0)"));
    report.notes.push_back(
        "leaderless mode: leader control channel removed from the augmented "
        "system");
  } else {
    pd_check("pd:R0", cost.R0);
  }
  pd_check("pd:R", cost.R);

  // Noise must be zero mean with PSD covariance.
  {
    Check mean_check("noise:zero-mean");
    Check cov_check("noise:cov-psd");
    for (const auto* dist : {&model.noise.leader, &model.noise.follower}) {
      if (dist->kind == DistKind::Point) {
        mean_check.passed = false;
        mean_check.detail = "noise cannot be a point mass";
        continue;
      }
      const double mean = max_abs(dist->expectation());
      if (mean > 0.0) {
        mean_check.passed = false;
        mean_check.witness = mean;
        mean_check.detail = "noise has nonzero mean";
      }
      if (dist->kind == DistKind::Gaussian) {
        const double lo = min_eigenvalue(dist->cov);
        if (asymmetry(dist->cov) > kSymmetryTol ||
            lo < -kPsdTol * std::max(1.0, spectral_norm_sym(dist->cov))) {
          cov_check.passed = false;
          cov_check.witness = lo;
          cov_check.detail = "covariance not symmetric PSD";
        }
      }
      if (dist->kind == DistKind::Uniform &&
          (dist->high - dist->low).minCoeff() < 0.0) {
        cov_check.passed = false;
        cov_check.detail = "uniform support has high < low";
      }
    }
    report.checks.push_back(mean_check);
    report.checks.push_back(cov_check);
  }

  if (cost.infinite()) {
    Check disc("discount");
    if (!(cost.beta > 0.0 && cost.beta <= 1.0)) {
      disc.passed = false;
      disc.witness = cost.beta;
      disc.detail = "beta must lie in (0, 1]";
    }
    report.checks.push_back(disc);

    const double sb = std::sqrt(std::max(cost.beta, 0.0));
    const AugmentedSystem aug = build_augmented(model, cost, 1);
    auto pbh_check = [&](const std::string& name, const PbhResult& r) {
      Check c(name);
      c.passed = r.ok;
      if (!r.ok) {
        c.pbh_eigenvalue = r.witness;
        c.witness = std::abs(*r.witness);
        c.detail = "PBH rank deficient at an eigenvalue with |lambda| >= 1";
      }
      report.checks.push_back(c);
    };
    pbh_check("stabilizable:deviation",
              check_stabilizable(sb * model.A.at(1), sb * model.B.at(1)));
    pbh_check("stabilizable:augmented",
              check_stabilizable(sb * aug.A_bar, sb * aug.B_bar));
    if (dev_psd) {
      pbh_check("detectable:deviation",
                check_detectable(sb * model.A.at(1), matrix_sqrt_psd(aug.Q_dev)));
    } else {
      report.checks.push_back(Check("detectable:deviation", false, "skipped: Q+P+H not PSD"));
    }
    if (aug_psd) {
      pbh_check("detectable:augmented",
                check_detectable(sb * aug.A_bar, matrix_sqrt_psd(aug.Q_bar)));
    } else {
      report.checks.push_back(Check("detectable:augmented", false, "skipped: Q_bar not PSD"));
    }

    // The deviation pair is checked with (Q+P+H)^{1/2}, the weight the
    // deviation cost actually carries. Record what Q^{1/2} alone would say.
    std::string q_only = "not evaluated (Q not PSD)";
    if (min_eigenvalue(cost.Q.at(1)) >= -kPsdTol * std::max(1.0, spectral_norm_sym(cost.Q.at(1)))) {
      q_only = check_detectable(sb * model.A.at(1),
                                matrix_sqrt_psd(symmetrized(cost.Q.at(1))))
                       .ok
                   ? "detectable"
                   : "NOT detectable";
    }
    report.notes.push_back(
        "deviation detectability uses (Q+P+H)^{1/2}; with Q^{1/2} alone the "
        "pair is " + q_only);
  }
  (void)d;
  return report;
}

}  // namespace mflqr
