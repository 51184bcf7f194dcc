#pragma once

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "marx/errors.hpp"

namespace marx {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrized(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline bool is_symmetric(const MatrixXd& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Cholesky factorization of a symmetric positive definite matrix.
/// Throws NumericalError naming `what` if the matrix is asymmetric or any
/// pivot fails.
inline Eigen::LLT<MatrixXd> cholesky_spd(const MatrixXd& m, const std::string& what) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(what + " must be square, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (!is_symmetric(m)) throw NumericalError(what + " is not symmetric");
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(what + " is not positive definite (Cholesky pivot failure)");
  return llt;
}

inline bool is_spd(const MatrixXd& m) {
  if (!is_symmetric(m)) return false;
  return Eigen::LLT<MatrixXd>(m).info() == Eigen::Success;
}

inline double log_det_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

/// x' M x through an existing factorization of M.
inline double quad_form(const Eigen::LLT<MatrixXd>& llt_of_m, const VectorXd& x) {
  return (llt_of_m.matrixL().transpose() * x).squaredNorm();
}

/// x' M^{-1} x through an existing factorization of M.
inline double inv_quad_form(const Eigen::LLT<MatrixXd>& llt_of_m, const VectorXd& x) {
  return llt_of_m.matrixL().solve(x).squaredNorm();
}

inline MatrixXd spd_inverse(const Eigen::LLT<MatrixXd>& llt, Eigen::Index n) {
  return symmetrized(llt.solve(MatrixXd::Identity(n, n)));
}

inline void require_dims(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                         const std::string& what) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(what + " must be " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()));
}

}  // namespace marx
