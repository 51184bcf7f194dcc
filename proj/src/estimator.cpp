#include "marx/estimator.hpp"

namespace marx {

MnwBelief updated_belief(const MnwBelief& prior, const VectorXd& x, const VectorXd& y) {
  const Eigen::Index dx = prior.dx();
  const Eigen::Index dy = prior.dy();
  if (x.size() != dx)
    throw std::invalid_argument("updated_belief: x has dimension " +
                                std::to_string(x.size()) + ", expected " + std::to_string(dx));
  if (y.size() != dy)
    throw std::invalid_argument("updated_belief: y has dimension " +
                                std::to_string(y.size()) + ", expected " + std::to_string(dy));

  MnwBelief post;
  post.nu = prior.nu + 1.0;
  post.Lambda = symmetrized(prior.Lambda + x * x.transpose());
  const MatrixXd lambda_m = prior.Lambda * prior.M;
  const MatrixXd xi = lambda_m + x * y.transpose();
  const auto llt = cholesky_spd(post.Lambda, "updated_belief: updated Lambda");
  post.M = llt.solve(xi);
  // Phi_t = Omega + M'Lambda M + y y'; Omega_t = Phi_t - Xi_t' M_t.
  const MatrixXd phi =
      symmetrized(prior.Omega + prior.M.transpose() * lambda_m + y * y.transpose());
  post.Omega = symmetrized(phi - xi.transpose() * post.M);
  Eigen::LLT<MatrixXd> omega_llt(post.Omega);
  if (omega_llt.info() != Eigen::Success)
    throw NumericalError(
        "updated_belief: updated Omega lost positive definiteness (nu=" +
        std::to_string(post.nu) + ", min diagonal=" +
        std::to_string(post.Omega.diagonal().minCoeff()) + ")");
  return post;
}

MnwNaturalMessage likelihood_message(const VectorXd& x, const VectorXd& y) {
  MnwNaturalMessage msg;
  msg.Lambda = x * x.transpose();
  msg.Xi = x * y.transpose();
  msg.Phi = y * y.transpose();
  msg.nu = 2.0 - static_cast<double>(x.size()) + static_cast<double>(y.size());
  return msg;
}

MnwBelief posterior_from_messages(const MnwBelief& prior, const MnwNaturalMessage& msg) {
  return to_moment(mnw_product(to_natural(prior), msg));
}

PredictiveT predict(const MnwBelief& belief, const VectorXd& x) {
  const Eigen::Index dy = belief.dy();
  if (x.size() != belief.dx())
    throw std::invalid_argument("predict: x has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(belief.dx()));
  const double eta = belief.nu - static_cast<double>(dy) + 1.0;
  if (!(eta > 0.0))
    throw NumericalError("predict: eta = nu - dy + 1 = " + std::to_string(eta) +
                         " is not positive; prior too weak for a proper predictive");
  const auto llt_lambda = cholesky_spd(belief.Lambda, "predict: Lambda");
  const double lambda_tau = 1.0 / (1.0 + inv_quad_form(llt_lambda, x));
  const auto llt_omega = cholesky_spd(belief.Omega, "predict: Omega");
  PredictiveT t;
  t.mu = belief.M.transpose() * x;
  t.Psi = eta * lambda_tau * spd_inverse(llt_omega, dy);
  t.eta = eta;
  return t;
}

double log_evidence(const MnwBelief& belief, const VectorXd& x, const VectorXd& y) {
  return mvt_log_pdf(y, predict(belief, x));
}

MarxEstimator::MarxEstimator(MnwBelief prior, RegressorBuffer buffer)
    : belief_(std::move(prior)), buffer_(std::move(buffer)) {
  belief_.validate();
  if (belief_.dx() != buffer_.dim_x() || belief_.dy() != buffer_.dim_y())
    throw std::invalid_argument(
        "MarxEstimator: prior dimensions (" + std::to_string(belief_.dx()) + "x" +
        std::to_string(belief_.dy()) + ") do not match buffer (" +
        std::to_string(buffer_.dim_x()) + "x" + std::to_string(buffer_.dim_y()) + ")");
}

double MarxEstimator::update(const VectorXd& x, const VectorXd& y) {
  const double step_evidence = log_evidence(belief_, x, y);
  belief_ = updated_belief(belief_, x, y);
  cumulative_log_evidence_ += step_evidence;
  ++step_count_;
  return step_evidence;
}

double MarxEstimator::observe(const VectorXd& u, const VectorXd& y) {
  const double step_evidence = update(buffer_.regressor(u), y);
  buffer_.advance(u, y);
  return step_evidence;
}

double MarxEstimator::coefficient_sd(Eigen::Index i, Eigen::Index j) const {
  const double denom = belief_.nu - static_cast<double>(belief_.dy()) - 1.0;
  if (!(denom > 0.0))
    throw NumericalError("coefficient_sd: marginal variance requires nu > dy + 1");
  const auto llt = cholesky_spd(belief_.Lambda, "coefficient_sd: Lambda");
  const double lambda_inv_ii = inv_quad_form(llt, VectorXd::Unit(belief_.dx(), i));
  return std::sqrt(lambda_inv_ii * belief_.Omega(j, j) / denom);
}

MatrixXd MarxEstimator::precision_mean() const {
  const auto llt = cholesky_spd(belief_.Omega, "precision_mean: Omega");
  return belief_.nu * spd_inverse(llt, belief_.dy());
}

void MarxEstimator::restore(MnwBelief belief, RegressorBuffer buffer, long step_count,
                            double cumulative_log_evidence) {
  belief.validate();
  if (belief.dx() != buffer.dim_x() || belief.dy() != buffer.dim_y())
    throw std::invalid_argument("restore: belief/buffer dimension mismatch");
  belief_ = std::move(belief);
  buffer_ = std::move(buffer);
  step_count_ = step_count;
  cumulative_log_evidence_ = cumulative_log_evidence;
}

}  // namespace marx
