#pragma once

#include "marx/mnw.hpp"
#include "marx/regressor.hpp"

namespace marx {

/// Single conjugate update of a matrix-normal-Wishart belief with one
/// regressor/observation pair:
///   nu    <- nu + 1
///   Lambda <- Lambda + x x'
///   M     <- Lambda_new^{-1} (Lambda M + x y')
///   Omega <- Phi_new - Xi_new' M_new   (natural representation of the
///            four-term moment update, re-symmetrized)
/// Throws NumericalError if the updated Omega loses positive definiteness.
MnwBelief updated_belief(const MnwBelief& prior, const VectorXd& x, const VectorXd& y);

/// Sum-product message from one likelihood factor towards (A, W), in natural
/// form: (x x', x y', y y', 2 - dx + dy). Lambda is rank one, so the message
/// has no moment form for dx > 1.
MnwNaturalMessage likelihood_message(const VectorXd& x, const VectorXd& y);

/// Equality-node route to the posterior: prior -> natural form, product with
/// the likelihood message, back to moment form. Agrees with updated_belief().
MnwBelief posterior_from_messages(const MnwBelief& prior, const MnwNaturalMessage& msg);

/// Posterior predictive for the output at regressor x:
///   mu = M'x,  lambda = (1 + x'Lambda^{-1}x)^{-1},
///   eta = nu - dy + 1,  Psi = eta * lambda * Omega^{-1}.
/// Throws if eta <= 0 (belief too weak for a proper predictive).
PredictiveT predict(const MnwBelief& belief, const VectorXd& x);

/// One-step-ahead log marginal likelihood of y at regressor x: the predictive
/// T log-density.
double log_evidence(const MnwBelief& belief, const VectorXd& x, const VectorXd& y);

/// Recursive Bayesian MARX estimator: a matrix-normal-Wishart belief over
/// (A, W) plus the lag buffer that assembles regressors from the stream.
/// Value semantics; no internal locking.
class MarxEstimator {
 public:
  MarxEstimator(MnwBelief prior, RegressorBuffer buffer);

  const MnwBelief& belief() const { return belief_; }
  const RegressorBuffer& buffer() const { return buffer_; }
  long step_count() const { return step_count_; }
  double cumulative_log_evidence() const { return cumulative_log_evidence_; }

  VectorXd regressor(const VectorXd& u_now) const { return buffer_.regressor(u_now); }

  /// Conjugate update with an externally assembled regressor. Returns the
  /// step's log-evidence contribution. Does not touch the lag buffer.
  double update(const VectorXd& x, const VectorXd& y);

  /// Streaming step: assemble the regressor for u, update, advance the
  /// buffer. Returns the step's log evidence.
  double observe(const VectorXd& u, const VectorXd& y);

  PredictiveT predictive(const VectorXd& x) const { return predict(belief_, x); }

  /// Posterior standard deviation of coefficient A(i, j) under the matrix-T
  /// marginal: sqrt(Lambda^{-1}_{ii} * Omega_{jj} / (nu - dy - 1)).
  /// Requires nu > dy + 1.
  double coefficient_sd(Eigen::Index i, Eigen::Index j) const;

  /// Posterior mean of the precision matrix, nu * Omega^{-1}.
  MatrixXd precision_mean() const;

  void restore(MnwBelief belief, RegressorBuffer buffer, long step_count,
               double cumulative_log_evidence);

 private:
  MnwBelief belief_;
  RegressorBuffer buffer_;
  long step_count_ = 0;
  double cumulative_log_evidence_ = 0.0;
};

}  // namespace marx
