#include "marx/mnw.hpp"

#include <cmath>
#include <random>

namespace marx {

namespace {
constexpr double kLn2Pi = 1.8378770664093454836;
constexpr double kLnPi = 1.1447298858494001741;
constexpr double kLn2 = 0.6931471805599453094;
}  // namespace

void MnwBelief::validate() const {
  if (M.size() == 0) throw std::invalid_argument("MnwBelief.M is empty");
  require_dims(Lambda, dx(), dx(), "MnwBelief.Lambda");
  require_dims(Omega, dy(), dy(), "MnwBelief.Omega");
  cholesky_spd(Lambda, "MnwBelief.Lambda");
  cholesky_spd(Omega, "MnwBelief.Omega");
  if (!(nu > static_cast<double>(dy()) - 1.0))
    throw std::invalid_argument("MnwBelief.nu must exceed dy - 1, got " + std::to_string(nu));
}

double ln_multigamma(int d, double a) {
  if (d < 1) throw std::invalid_argument("ln_multigamma: dimension must be positive");
  if (!(a > 0.5 * (d - 1)))
    throw std::domain_error("ln_multigamma: argument must exceed (d-1)/2, got " +
                            std::to_string(a) + " with d=" + std::to_string(d));
  double s = 0.25 * d * (d - 1) * kLnPi;
  for (int j = 1; j <= d; ++j) s += std::lgamma(a + 0.5 * (1 - j));
  return s;
}

double mn_log_pdf(const MatrixXd& A, const MatrixXd& M, const MatrixXd& row_cov,
                  const MatrixXd& col_cov) {
  const Eigen::Index dx = M.rows();
  const Eigen::Index dy = M.cols();
  require_dims(A, dx, dy, "mn_log_pdf: A");
  require_dims(row_cov, dx, dx, "mn_log_pdf: row covariance");
  require_dims(col_cov, dy, dy, "mn_log_pdf: column covariance");
  const auto llt_u = cholesky_spd(row_cov, "mn_log_pdf: row covariance");
  const auto llt_v = cholesky_spd(col_cov, "mn_log_pdf: column covariance");
  // tr[V^{-1} E' U^{-1} E] with E = A - M, via two triangular solves.
  const MatrixXd t1 = llt_u.matrixL().solve(A - M);
  const double quad = llt_v.matrixL().solve(t1.transpose()).squaredNorm();
  return -0.5 * dx * dy * kLn2Pi - 0.5 * dx * log_det_from_llt(llt_v) -
         0.5 * dy * log_det_from_llt(llt_u) - 0.5 * quad;
}

double wishart_log_pdf(const MatrixXd& W, const MatrixXd& scale, double nu) {
  const Eigen::Index d = scale.rows();
  require_dims(W, d, d, "wishart_log_pdf: W");
  const auto llt_w = cholesky_spd(W, "wishart_log_pdf: W");
  const auto llt_s = cholesky_spd(scale, "wishart_log_pdf: scale");
  if (!(nu > static_cast<double>(d) - 1.0))
    throw std::domain_error("wishart_log_pdf: nu must exceed d - 1, got " + std::to_string(nu));
  // tr[S^{-1} W] = ||L_S^{-1} L_W||_F^2.
  const double trace = llt_s.matrixL().solve(MatrixXd(llt_w.matrixL())).squaredNorm();
  return 0.5 * (nu - d - 1) * log_det_from_llt(llt_w) - 0.5 * trace -
         0.5 * nu * d * kLn2 - 0.5 * nu * log_det_from_llt(llt_s) -
         ln_multigamma(static_cast<int>(d), 0.5 * nu);
}

double mnw_log_pdf(const MatrixXd& A, const MatrixXd& W, const MnwBelief& belief) {
  belief.validate();
  const Eigen::Index dx = belief.dx();
  const Eigen::Index dy = belief.dy();
  require_dims(A, dx, dy, "mnw_log_pdf: A");
  require_dims(W, dy, dy, "mnw_log_pdf: W");
  const auto llt_w = cholesky_spd(W, "mnw_log_pdf: W");
  const auto llt_lambda = cholesky_spd(belief.Lambda, "mnw_log_pdf: Lambda");
  const auto llt_omega = cholesky_spd(belief.Omega, "mnw_log_pdf: Omega");

  // tr[W E' Lambda E] with E = A - M: E' Lambda E = C'C for C = L_Lambda' E,
  // and tr[C'C W] = ||C L_W||_F^2.
  const MatrixXd c = llt_lambda.matrixL().transpose() * (A - belief.M);
  const double quad_a = (c * llt_w.matrixL()).squaredNorm();
  // tr[W Omega] = ||L_Omega' L_W||_F^2.
  const double trace_w =
      (llt_omega.matrixL().transpose() * MatrixXd(llt_w.matrixL())).squaredNorm();

  const double log_det_w = log_det_from_llt(llt_w);
  return -0.5 * dx * dy * kLn2Pi + 0.5 * dx * log_det_w +
         0.5 * dy * log_det_from_llt(llt_lambda) - 0.5 * quad_a +
         0.5 * (belief.nu - dy - 1) * log_det_w - 0.5 * trace_w -
         0.5 * belief.nu * dy * kLn2 + 0.5 * belief.nu * log_det_from_llt(llt_omega) -
         ln_multigamma(static_cast<int>(dy), 0.5 * belief.nu);
}

double mnw_log_unnormalized(const MatrixXd& A, const MatrixXd& W,
                            const MnwNaturalMessage& msg) {
  const Eigen::Index dx = msg.dx();
  const Eigen::Index dy = msg.dy();
  require_dims(A, dx, dy, "mnw_log_unnormalized: A");
  require_dims(W, dy, dy, "mnw_log_unnormalized: W");
  const auto llt_w = cholesky_spd(W, "mnw_log_unnormalized: W");
  const MatrixXd b = symmetrized(A.transpose() * msg.Lambda * A - A.transpose() * msg.Xi -
                                 msg.Xi.transpose() * A + msg.Phi);
  return 0.5 * (msg.nu + dx - dy - 1) * log_det_from_llt(llt_w) - 0.5 * (W * b).trace();
}

double mvt_log_pdf(const VectorXd& y, const PredictiveT& t) {
  const Eigen::Index d = t.dim();
  if (y.size() != d)
    throw std::invalid_argument("mvt_log_pdf: y has dimension " + std::to_string(y.size()) +
                                ", expected " + std::to_string(d));
  if (!(t.eta > 0.0))
    throw std::domain_error("mvt_log_pdf: eta must be positive, got " + std::to_string(t.eta));
  const auto llt_psi = cholesky_spd(t.Psi, "mvt_log_pdf: Psi");
  const double q = quad_form(llt_psi, y - t.mu);
  return std::lgamma(0.5 * (t.eta + d)) - std::lgamma(0.5 * t.eta) -
         0.5 * d * (std::log(t.eta) + kLnPi) + 0.5 * log_det_from_llt(llt_psi) -
         0.5 * (t.eta + d) * std::log1p(q / t.eta);
}

double gaussian_log_pdf_precision(const VectorXd& y, const VectorXd& mean,
                                  const MatrixXd& W) {
  if (y.size() != mean.size())
    throw std::invalid_argument("gaussian_log_pdf_precision: dimension mismatch");
  const auto llt_w = cholesky_spd(W, "gaussian_log_pdf_precision: W");
  const double q = quad_form(llt_w, y - mean);
  return 0.5 * log_det_from_llt(llt_w) - 0.5 * y.size() * kLn2Pi - 0.5 * q;
}

MnwNaturalMessage to_natural(const MnwBelief& belief) {
  belief.validate();
  MnwNaturalMessage msg;
  msg.Lambda = belief.Lambda;
  msg.Xi = belief.Lambda * belief.M;
  msg.Phi = symmetrized(belief.Omega + belief.M.transpose() * msg.Xi);
  msg.nu = belief.nu;
  return msg;
}

MnwBelief to_moment(const MnwNaturalMessage& msg) {
  const auto llt_lambda = cholesky_spd(msg.Lambda, "to_moment: message Lambda");
  MnwBelief belief;
  belief.Lambda = msg.Lambda;
  belief.M = llt_lambda.solve(msg.Xi);
  belief.Omega = symmetrized(msg.Phi - msg.Xi.transpose() * belief.M);
  belief.nu = msg.nu;
  cholesky_spd(belief.Omega, "to_moment: recovered Omega");
  if (!(belief.nu > static_cast<double>(msg.dy()) - 1.0))
    throw NumericalError("to_moment: nu = " + std::to_string(belief.nu) +
                         " does not exceed dy - 1; message is improper");
  return belief;
}

MnwNaturalMessage mnw_product(const MnwNaturalMessage& p1, const MnwNaturalMessage& p2) {
  if (p1.dx() != p2.dx() || p1.dy() != p2.dy())
    throw std::invalid_argument("mnw_product: factor dimensions differ");
  MnwNaturalMessage out;
  out.Lambda = p1.Lambda + p2.Lambda;
  out.Xi = p1.Xi + p2.Xi;
  out.Phi = p1.Phi + p2.Phi;
  out.nu = p1.nu + p2.nu + static_cast<double>(p1.dx()) - static_cast<double>(p1.dy()) - 1.0;
  return out;
}

std::pair<MatrixXd, MatrixXd> mnw_sample(const MnwBelief& belief, std::uint64_t seed) {
  belief.validate();
  const Eigen::Index dx = belief.dx();
  const Eigen::Index dy = belief.dy();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);

  // Bartlett: W = F B B' F' with F F' = Omega^{-1}, B lower triangular,
  // B_ii^2 ~ chi^2(nu - i) and off-diagonals standard normal.
  MatrixXd bartlett = MatrixXd::Zero(dy, dy);
  for (Eigen::Index i = 0; i < dy; ++i) {
    std::gamma_distribution<double> chi2(0.5 * (belief.nu - static_cast<double>(i)), 2.0);
    bartlett(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = n01(rng);
  }
  const auto llt_omega = cholesky_spd(belief.Omega, "mnw_sample: Omega");
  const MatrixXd f = llt_omega.matrixL().transpose().solve(bartlett);  // L_Omega^{-T} B
  const MatrixXd w = symmetrized(f * f.transpose());

  MatrixXd z(dx, dy);
  for (Eigen::Index i = 0; i < dx; ++i)
    for (Eigen::Index j = 0; j < dy; ++j) z(i, j) = n01(rng);

  // A = M + L_Lambda^{-T} Z R' with R R' = W^{-1}, i.e. R' = L_W^{-1}.
  const auto llt_lambda = cholesky_spd(belief.Lambda, "mnw_sample: Lambda");
  const auto llt_w = cholesky_spd(w, "mnw_sample: W draw");
  const MatrixXd t1 = llt_lambda.matrixL().transpose().solve(z);
  const MatrixXd a =
      belief.M + llt_w.matrixL().transpose().solve(t1.transpose()).transpose();
  return {a, w};
}

}  // namespace marx
