#pragma once

// Small dense helpers shared by the modules. Everything here works on
// matrices of dimension d_x or 2 d_x, so no attention is paid to
// allocation.

#include <Eigen/Dense>

namespace mflqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

inline MatrixXd symmetrized(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// max_ij |m_ij - m_ji|
inline double asymmetry(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Induced infinity norm (max absolute row sum).
inline double norm_inf(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double max_abs(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

// Smallest eigenvalue of the symmetric part of `m`.
inline double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Spectral norm of a symmetric matrix (largest |eigenvalue|).
inline double spectral_norm_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace mflqr
