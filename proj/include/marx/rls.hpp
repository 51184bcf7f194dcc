#pragma once

#include "marx/linalg.hpp"

namespace marx {

/// Recursive least squares with forgetting factor 1.0: coefficient point
/// estimate A_hat and inverse sample covariance P.
struct RlsState {
  MatrixXd A_hat;  // dx x dy
  MatrixXd P;      // dx x dx, SPD

  Eigen::Index dx() const { return A_hat.rows(); }
  Eigen::Index dy() const { return A_hat.cols(); }
};

inline RlsState make_rls_state(Eigen::Index dx, Eigen::Index dy) {
  return {MatrixXd::Zero(dx, dy), MatrixXd::Identity(dx, dx)};
}

/// Rank-one RLS update. The gain uses the pre-update P:
///   P_t = P - P x (1 + x'Px)^{-1} x'P
///   A_t = A + P x (1 + x'Px)^{-1} (y - A'x)'
inline RlsState rls_update(const RlsState& state, const VectorXd& x, const VectorXd& y) {
  if (x.size() != state.dx() || y.size() != state.dy())
    throw std::invalid_argument("rls_update: dimension mismatch");
  const VectorXd px = state.P * x;
  const double gain = 1.0 / (1.0 + x.dot(px));
  RlsState next;
  next.P = symmetrized(state.P - gain * (px * px.transpose()));
  next.A_hat = state.A_hat + gain * px * (y - state.A_hat.transpose() * x).transpose();
  return next;
}

inline VectorXd rls_predict(const RlsState& state, const VectorXd& x) {
  if (x.size() != state.dx())
    throw std::invalid_argument("rls_predict: x has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(state.dx()));
  return state.A_hat.transpose() * x;
}

}  // namespace marx
