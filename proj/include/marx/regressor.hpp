#pragma once

#include <deque>

#include "marx/linalg.hpp"

namespace marx {

/// Fixed-depth histories of past outputs and inputs from which the regressor
/// x_t is assembled. Layout of x_t:
///   [y_{t-1}; y_{t-2}; ...; y_{t-N_y}; u_t; u_{t-1}; ...; u_{t-N_u+1}]
/// i.e. the column-major vectorization of the lag matrices, newest lag first.
/// Histories start zero-padded so the regressor is defined from t = 1.
class RegressorBuffer {
 public:
  RegressorBuffer(int n_y_lags, int n_u_lags, int dim_y, int dim_u)
      : n_y_lags_(n_y_lags), n_u_lags_(n_u_lags), dim_y_(dim_y), dim_u_(dim_u) {
    if (n_y_lags < 1 || n_u_lags < 1 || dim_y < 1 || dim_u < 1)
      throw std::invalid_argument("RegressorBuffer: orders and dimensions must be positive");
    for (int i = 0; i < n_y_lags_; ++i) y_hist_.push_back(VectorXd::Zero(dim_y_));
    for (int i = 0; i < n_u_lags_ - 1; ++i) u_hist_.push_back(VectorXd::Zero(dim_u_));
  }

  int n_y_lags() const { return n_y_lags_; }
  int n_u_lags() const { return n_u_lags_; }
  int dim_y() const { return dim_y_; }
  int dim_u() const { return dim_u_; }
  int dim_x() const { return n_y_lags_ * dim_y_ + n_u_lags_ * dim_u_; }

  /// Assembles x_t for the current input u_t. Does not mutate the buffer.
  VectorXd regressor(const VectorXd& u_now) const {
    if (u_now.size() != dim_u_)
      throw std::invalid_argument("regressor: u has dimension " +
                                  std::to_string(u_now.size()) + ", expected " +
                                  std::to_string(dim_u_));
    VectorXd x(dim_x());
    Eigen::Index at = 0;
    for (const auto& y : y_hist_) {
      x.segment(at, dim_y_) = y;
      at += dim_y_;
    }
    x.segment(at, dim_u_) = u_now;
    at += dim_u_;
    for (const auto& u : u_hist_) {
      x.segment(at, dim_u_) = u;
      at += dim_u_;
    }
    return x;
  }

  /// Pushes the step's input and observed output into the histories.
  void advance(const VectorXd& u_now, const VectorXd& y_now) {
    if (u_now.size() != dim_u_ || y_now.size() != dim_y_)
      throw std::invalid_argument("advance: dimension mismatch");
    y_hist_.push_front(y_now);
    y_hist_.pop_back();
    if (n_u_lags_ > 1) {
      u_hist_.push_front(u_now);
      u_hist_.pop_back();
    }
  }

  const std::deque<VectorXd>& y_history() const { return y_hist_; }
  const std::deque<VectorXd>& u_history() const { return u_hist_; }

  void set_histories(std::deque<VectorXd> y_hist, std::deque<VectorXd> u_hist) {
    if (static_cast<int>(y_hist.size()) != n_y_lags_ ||
        static_cast<int>(u_hist.size()) != n_u_lags_ - 1)
      throw std::invalid_argument("set_histories: wrong history length");
    y_hist_ = std::move(y_hist);
    u_hist_ = std::move(u_hist);
  }

 private:
  int n_y_lags_, n_u_lags_, dim_y_, dim_u_;
  std::deque<VectorXd> y_hist_;  // y_{t-1}, ..., y_{t-N_y}
  std::deque<VectorXd> u_hist_;  // u_{t-1}, ..., u_{t-N_u+1}
};

}  // namespace marx
