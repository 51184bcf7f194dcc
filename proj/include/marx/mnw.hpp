#pragma once

#include <cstdint>
#include <utility>

#include "marx/linalg.hpp"

namespace marx {

/// Matrix-normal-Wishart belief over a coefficient matrix A (dx x dy) and a
/// noise precision matrix W (dy x dy).
///
/// Parameterization: A | W ~ MN(M, Lambda^{-1}, W^{-1}) with row precision
/// Lambda, and W ~ Wishart(Omega^{-1}, nu) with inverse scale Omega.
struct MnwBelief {
  MatrixXd M;       // dx x dy coefficient mean
  MatrixXd Lambda;  // dx x dx row precision, SPD
  MatrixXd Omega;   // dy x dy Wishart inverse scale, SPD
  double nu = 0.0;  // degrees of freedom, > dy - 1

  Eigen::Index dx() const { return M.rows(); }
  Eigen::Index dy() const { return M.cols(); }

  /// Throws if any invariant is violated (shapes, SPD, nu range).
  void validate() const;
};

/// Natural-parameter bundle (Lambda, Xi = Lambda M, Phi = Omega + M' Lambda M, nu).
///
/// Unlike MnwBelief this form admits improper messages: Lambda may be
/// singular (e.g. the rank-one x x' of a single likelihood factor) and nu is
/// unconstrained. Products of messages are parameter sums in this form.
struct MnwNaturalMessage {
  MatrixXd Lambda;  // dx x dx, symmetric PSD (possibly singular)
  MatrixXd Xi;      // dx x dy
  MatrixXd Phi;     // dy x dy, symmetric PSD
  double nu = 0.0;

  Eigen::Index dx() const { return Xi.rows(); }
  Eigen::Index dy() const { return Xi.cols(); }
};

/// Multivariate location-scale T-distribution parameters: location mu,
/// inverse scale Psi (SPD) and degrees of freedom eta > 0.
struct PredictiveT {
  VectorXd mu;
  MatrixXd Psi;
  double eta = 0.0;

  Eigen::Index dim() const { return mu.size(); }
};

/// ln Gamma_d(a), the d-dimensional multivariate gamma function in log space.
/// Requires a > (d-1)/2.
double ln_multigamma(int d, double a);

/// Log-density of the matrix normal with mean M, row covariance `row_cov`
/// and column covariance `col_cov` (both SPD) at A.
double mn_log_pdf(const MatrixXd& A, const MatrixXd& M, const MatrixXd& row_cov,
                  const MatrixXd& col_cov);

/// Log-density of the Wishart with scale matrix `scale` (SPD) and degrees of
/// freedom nu > d - 1 at an SPD matrix W.
double wishart_log_pdf(const MatrixXd& W, const MatrixXd& scale, double nu);

/// Joint log-density of (A, W) under the belief, including all normalization
/// constants. Equals mn_log_pdf(A | M, Lambda^{-1}, W^{-1}) +
/// wishart_log_pdf(W | Omega^{-1}, nu).
double mnw_log_pdf(const MatrixXd& A, const MatrixXd& W, const MnwBelief& belief);

/// Unnormalized matrix-normal-Wishart log-kernel in natural parameters:
///   (nu + dx - dy - 1)/2 * ln|W| - 1/2 tr[W (A'Lambda A - A'Xi - Xi'A + Phi)].
/// Defined for singular Lambda as well.
double mnw_log_unnormalized(const MatrixXd& A, const MatrixXd& W,
                            const MnwNaturalMessage& msg);

/// Log-density of the multivariate location-scale T at y.
double mvt_log_pdf(const VectorXd& y, const PredictiveT& t);

/// Gaussian log-density with precision parameterization: N(y | mean, W^{-1}).
double gaussian_log_pdf_precision(const VectorXd& y, const VectorXd& mean,
                                  const MatrixXd& W);

MnwNaturalMessage to_natural(const MnwBelief& belief);

/// Moment-form recovery. Defined only when Lambda is PD, the recovered
/// Omega = Phi - Xi' Lambda^{-1} Xi is PD, and nu > dy - 1; throws otherwise.
MnwBelief to_moment(const MnwNaturalMessage& msg);

/// Product of two matrix-normal-Wishart factors: natural parameters add and
/// nu_3 = nu_1 + nu_2 + dx - dy - 1.
MnwNaturalMessage mnw_product(const MnwNaturalMessage& p1, const MnwNaturalMessage& p2);

/// Draws (A, W) from the belief. W comes from the Wishart via Bartlett
/// decomposition, A from the matrix normal conditional on W. Deterministic
/// for a fixed seed.
std::pair<MatrixXd, MatrixXd> mnw_sample(const MnwBelief& belief, std::uint64_t seed);

}  // namespace marx
