#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "marx/regressor.hpp"

namespace marx {

/// AR regression coefficients of a discrete low-pass Butterworth filter
/// (bilinear transform of the analog prototype): the denominator polynomial
/// 1 + a_1 z^{-1} + ... + a_N z^{-N}, sign-flipped into regression form
/// c_l = -a_l so that y_t = sum_l c_l y_{t-l} + ... . Throws if the cutoff is
/// at or above Nyquist.
std::vector<double> butterworth_ar_coefficients(int order, double cutoff_hz,
                                                double sample_rate_hz);

/// Spectral radius of the companion matrix of the autoregressive part of A
/// (the y-lag blocks only).
double companion_spectral_radius(const MatrixXd& A, int n_y_lags, int dim_y);

/// Ground truth for the synthetic MARX system: true coefficients and noise
/// precision.
struct MarxSystemTruth {
  MatrixXd A_true;  // dx x dy
  MatrixXd W_true;  // dy x dy, SPD
  int n_y_lags = 0, n_u_lags = 0, dim_y = 0, dim_u = 0;
  int stability_rejections = 0;  // redraws needed to reach a stable system
};

/// Draws a random stable MARX system. Self-connection lag coefficients come
/// from the Butterworth design; every cross-channel and input coefficient is
/// i.i.d. N(0, cross_std^2). Draws whose companion spectral radius reaches 1
/// are rejected and redrawn (bounded retries, each rejection logged).
MarxSystemTruth gen_true_coefficients(int n_y_lags, int n_u_lags, int dim_y, int dim_u,
                                      double cutoff_hz, double sample_rate_hz,
                                      double cross_std, MatrixXd w_true,
                                      std::mt19937_64& rng, int max_retries = 1000);

/// One simulator step: y_t = A'x_t + e_t with e_t ~ N(0, W^{-1}); advances
/// the buffer.
VectorXd marx_step(const MarxSystemTruth& truth, RegressorBuffer& buffer,
                   const VectorXd& u, std::mt19937_64& rng);

struct MsdParams {
  double m1 = 1.0, m2 = 1.0;
  double k1 = 1.0, k2 = 1.0;
  double c1 = 0.1, c2 = 0.1;
  double dt = 0.05;

  void validate() const;
};

/// Double mass-spring-damper state: positions and velocities of both masses.
struct MsdState {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  Eigen::Vector2d z_dot = Eigen::Vector2d::Zero();
  MsdParams params;
};

/// Forward-Euler step of I z'' = K z + C z' + u. Position is advanced with
/// the pre-update velocity.
MsdState msd_step(const MsdState& state, const Eigen::Vector2d& u);

/// Noisy position measurement with the given noise precision (SPD 2x2).
Eigen::Vector2d msd_observe(const MsdState& state, const MatrixXd& noise_precision,
                            std::mt19937_64& rng);

struct InputSignalConfig {
  std::string kind = "gaussian";  // "gaussian" or "sine_sweep"
  double std_dev = 0.5;           // gaussian
  double amplitude = 1.0;         // sine_sweep
  double freq_start = 0.005;      // cycles per step
  double freq_end = 0.05;
  long sweep_steps = 1000;        // ramp length of the linear chirp

  void validate() const;  // throws ConfigError on unknown kind
};

/// Input sample for step t under the configured generator.
VectorXd input_signal(long t, const InputSignalConfig& config, int dim_u,
                      std::mt19937_64& rng);

/// Trajectory CSV: header "t,y_1..y_{D_y},u_1..u_{D_u}", one row per step,
/// full-precision scientific notation.
struct Trajectory {
  std::vector<VectorXd> y;
  std::vector<VectorXd> u;

  int dim_y() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
  int dim_u() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace marx
