// Test-only numerical oracles, independent of the library's evaluation paths.
#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Integral over the whole real line via the substitution y = tan(theta),
/// which handles polynomial-decay tails exactly.
inline double integrate_real_line(const std::function<double(double)>& f, int n = 4000) {
  const double half_pi = std::asin(1.0);
  return simpson(
      [&](double theta) {
        const double c = std::cos(theta);
        if (c < 1e-12) return 0.0;
        const double y = std::tan(theta);
        return f(y) / (c * c);
      },
      -half_pi + 1e-9, half_pi - 1e-9, n);
}

/// Integral of f over (0, upper] with the substitution w = s^2, which
/// removes the sqrt-type boundary singularity of Wishart-like densities.
inline double integrate_half_line(const std::function<double(double)>& f, double upper,
                                  int n = 4000) {
  return simpson([&](double s) { return 2.0 * s * f(s * s); }, 1e-12, std::sqrt(upper), n);
}

/// Dense multivariate normal log-density (mean/covariance form).
inline double mvn_log_pdf_dense(const VectorXd& y, const VectorXd& mean,
                                const MatrixXd& cov) {
  const Eigen::Index d = y.size();
  const Eigen::LLT<MatrixXd> llt(cov);
  const double log_det = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double q = llt.matrixL().solve(y - mean).squaredNorm();
  return -0.5 * d * std::log(2.0 * M_PI) - 0.5 * log_det - 0.5 * q;
}

/// Log-normalizer of the matrix-normal-Wishart kernel
///   |W|^{(nu+dx-dy-1)/2} exp(-1/2 tr[W((A-M)'Lambda(A-M)+Omega)]):
///   Z = (2pi)^{dx dy/2} |Lambda|^{-dy/2} 2^{nu dy/2} |Omega|^{-nu/2} Gamma_dy(nu/2).
inline double mnw_log_normalizer(const MatrixXd& lambda, const MatrixXd& omega, double nu) {
  const Eigen::Index dx = lambda.rows();
  const Eigen::Index dy = omega.rows();
  const double log_det_lambda =
      2.0 * MatrixXd(Eigen::LLT<MatrixXd>(lambda).matrixL()).diagonal().array().log().sum();
  const double log_det_omega =
      2.0 * MatrixXd(Eigen::LLT<MatrixXd>(omega).matrixL()).diagonal().array().log().sum();
  double multigamma = 0.25 * dy * (dy - 1) * std::log(M_PI);
  for (Eigen::Index j = 1; j <= dy; ++j) multigamma += std::lgamma(0.5 * nu + 0.5 * (1 - j));
  return 0.5 * dx * dy * std::log(2.0 * M_PI) - 0.5 * dy * log_det_lambda +
         0.5 * nu * dy * std::log(2.0) - 0.5 * nu * log_det_omega + multigamma;
}

/// Random SPD matrix with eigenvalues bounded away from zero.
inline MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> n01;
  MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = n01(rng);
  return g * g.transpose() + ridge * MatrixXd::Identity(n, n);
}

inline MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> n01;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * n01(rng);
  return m;
}

inline VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * n01(rng);
  return v;
}

}  // namespace oracles
