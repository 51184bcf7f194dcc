#include "marx/simulators.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace marx {

std::vector<double> butterworth_ar_coefficients(int order, double cutoff_hz,
                                                double sample_rate_hz) {
  if (order < 1) throw std::invalid_argument("butterworth: order must be positive");
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("butterworth: sample rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz))
    throw std::invalid_argument("butterworth: cutoff " + std::to_string(cutoff_hz) +
                                " Hz must lie strictly below Nyquist (" +
                                std::to_string(0.5 * sample_rate_hz) + " Hz)");
  using cplx = std::complex<double>;
  const double warped = 2.0 * sample_rate_hz * std::tan(M_PI * cutoff_hz / sample_rate_hz);
  // Monic denominator from the bilinear images of the analog prototype poles.
  std::vector<cplx> poly{1.0};
  for (int k = 1; k <= order; ++k) {
    const double angle = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
    const cplx analog_pole = warped * cplx(std::cos(angle), std::sin(angle));
    const cplx z_pole = (2.0 * sample_rate_hz + analog_pole) /
                        (2.0 * sample_rate_hz - analog_pole);
    poly.push_back(0.0);
    for (int i = static_cast<int>(poly.size()) - 1; i >= 1; --i)
      poly[i] -= z_pole * poly[i - 1];
  }
  std::vector<double> ar(order);
  for (int l = 1; l <= order; ++l) ar[l - 1] = -poly[l].real();
  return ar;
}

double companion_spectral_radius(const MatrixXd& A, int n_y_lags, int dim_y) {
  const int n = n_y_lags * dim_y;
  MatrixXd companion = MatrixXd::Zero(n, n);
  for (int lag = 0; lag < n_y_lags; ++lag)
    companion.block(0, lag * dim_y, dim_y, dim_y) =
        A.block(lag * dim_y, 0, dim_y, dim_y).transpose();
  if (n_y_lags > 1)
    companion.block(dim_y, 0, n - dim_y, n - dim_y) =
        MatrixXd::Identity(n - dim_y, n - dim_y);
  Eigen::EigenSolver<MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

MarxSystemTruth gen_true_coefficients(int n_y_lags, int n_u_lags, int dim_y, int dim_u,
                                      double cutoff_hz, double sample_rate_hz,
                                      double cross_std, MatrixXd w_true,
                                      std::mt19937_64& rng, int max_retries) {
  if (n_y_lags < 1 || n_u_lags < 1 || dim_y < 1 || dim_u < 1)
    throw std::invalid_argument("gen_true_coefficients: orders and dims must be positive");
  require_dims(w_true, dim_y, dim_y, "gen_true_coefficients: W_true");
  cholesky_spd(w_true, "gen_true_coefficients: W_true");
  const auto self_coeffs = butterworth_ar_coefficients(n_y_lags, cutoff_hz, sample_rate_hz);
  const int dim_x = n_y_lags * dim_y + n_u_lags * dim_u;

  MarxSystemTruth truth;
  truth.W_true = std::move(w_true);
  truth.n_y_lags = n_y_lags;
  truth.n_u_lags = n_u_lags;
  truth.dim_y = dim_y;
  truth.dim_u = dim_u;

  std::normal_distribution<double> cross(0.0, cross_std > 0.0 ? cross_std : 1.0);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    MatrixXd a = MatrixXd::Zero(dim_x, dim_y);
    if (cross_std > 0.0)
      for (int i = 0; i < dim_x; ++i)
        for (int j = 0; j < dim_y; ++j) a(i, j) = cross(rng);
    for (int channel = 0; channel < dim_y; ++channel)
      for (int lag = 1; lag <= n_y_lags; ++lag)
        a((lag - 1) * dim_y + channel, channel) = self_coeffs[lag - 1];
    if (companion_spectral_radius(a, n_y_lags, dim_y) < 1.0) {
      truth.A_true = std::move(a);
      return truth;
    }
    ++truth.stability_rejections;
    std::clog << "gen_true_coefficients: rejected unstable draw (attempt "
              << attempt + 1 << ")\n";
  }
  throw NumericalError("gen_true_coefficients: no stable system within " +
                       std::to_string(max_retries) + " retries");
}

VectorXd marx_step(const MarxSystemTruth& truth, RegressorBuffer& buffer,
                   const VectorXd& u, std::mt19937_64& rng) {
  const VectorXd x = buffer.regressor(u);
  std::normal_distribution<double> n01(0.0, 1.0);
  VectorXd z(truth.dim_y);
  for (int i = 0; i < truth.dim_y; ++i) z(i) = n01(rng);
  // e ~ N(0, W^{-1}) via e = L_W^{-T} z.
  const auto llt = cholesky_spd(truth.W_true, "marx_step: W_true");
  const VectorXd noise = llt.matrixL().transpose().solve(z);
  const VectorXd y = truth.A_true.transpose() * x + noise;
  buffer.advance(u, y);
  return y;
}

void MsdParams::validate() const {
  for (double v : {m1, m2, k1, k2, dt})
    if (!(v > 0.0))
      throw std::invalid_argument("MsdParams: masses, stiffness and dt must be positive");
  if (c1 < 0.0 || c2 < 0.0)
    throw std::invalid_argument("MsdParams: damping must be non-negative");
}

MsdState msd_step(const MsdState& state, const Eigen::Vector2d& u) {
  const auto& p = state.params;
  Eigen::Matrix2d stiffness, damping;
  stiffness << -(p.k1 + p.k2), p.k2, p.k2, -p.k2;
  damping << -(p.c1 + p.c2), p.c2, p.c2, -p.c2;
  const Eigen::Vector2d force = stiffness * state.z + damping * state.z_dot + u;
  const Eigen::Vector2d z_ddot(force(0) / p.m1, force(1) / p.m2);
  MsdState next = state;
  next.z = state.z + p.dt * state.z_dot;
  next.z_dot = state.z_dot + p.dt * z_ddot;
  return next;
}

Eigen::Vector2d msd_observe(const MsdState& state, const MatrixXd& noise_precision,
                            std::mt19937_64& rng) {
  require_dims(noise_precision, 2, 2, "msd_observe: noise precision");
  const auto llt = cholesky_spd(noise_precision, "msd_observe: noise precision");
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Vector2d z(n01(rng), n01(rng));
  return state.z + llt.matrixL().transpose().solve(z);
}

void InputSignalConfig::validate() const {
  if (kind != "gaussian" && kind != "sine_sweep")
    throw ConfigError("input signal: unknown generator \"" + kind +
                      "\" (expected \"gaussian\" or \"sine_sweep\")");
  if (std_dev < 0.0) throw ConfigError("input signal: std must be non-negative");
  if (kind == "sine_sweep" && sweep_steps < 1)
    throw ConfigError("input signal: sweep_steps must be positive");
}

VectorXd input_signal(long t, const InputSignalConfig& config, int dim_u,
                      std::mt19937_64& rng) {
  config.validate();
  VectorXd u = VectorXd::Zero(dim_u);
  if (config.kind == "gaussian") {
    if (config.std_dev > 0.0) {
      std::normal_distribution<double> dist(0.0, config.std_dev);
      for (int i = 0; i < dim_u; ++i) u(i) = dist(rng);
    }
    return u;
  }
  // Linear chirp: instantaneous frequency ramps from freq_start to freq_end
  // over sweep_steps, then stays; quarter-turn phase offset per channel.
  const double ramp = static_cast<double>(config.sweep_steps);
  const double td = static_cast<double>(t);
  const double slope = (config.freq_end - config.freq_start) / ramp;
  double phase;
  if (td <= ramp) {
    phase = 2.0 * M_PI * (config.freq_start * td + 0.5 * slope * td * td);
  } else {
    const double phase_ramp =
        2.0 * M_PI * (config.freq_start * ramp + 0.5 * slope * ramp * ramp);
    phase = phase_ramp + 2.0 * M_PI * config.freq_end * (td - ramp);
  }
  for (int i = 0; i < dim_u; ++i)
    u(i) = config.amplitude * std::sin(phase + 0.5 * M_PI * i);
  return u;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.y.size() != traj.u.size())
    throw std::invalid_argument("write_trajectory_csv: y/u length mismatch");
  const int dy = traj.dim_y();
  const int du = traj.dim_u();
  out << "t";
  for (int i = 1; i <= dy; ++i) out << ",y_" << i;
  for (int i = 1; i <= du; ++i) out << ",u_" << i;
  out << "\n";
  char buf[32];
  for (std::size_t t = 0; t < traj.y.size(); ++t) {
    out << t + 1;
    for (int i = 0; i < dy; ++i) {
      std::snprintf(buf, sizeof buf, "%.17e", traj.y[t](i));
      out << ',' << buf;
    }
    for (int i = 0; i < du; ++i) {
      std::snprintf(buf, sizeof buf, "%.17e", traj.u[t](i));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_trajectory_csv(out, traj);
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  return fields;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("trajectory CSV is empty");
  const auto header = split_csv_row(line);
  if (header.empty() || header[0] != "t")
    throw DataError("trajectory CSV line 1: header must start with \"t\"");
  int dy = 0, du = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("y_", 0) == 0 && du == 0)
      ++dy;
    else if (header[i].rfind("u_", 0) == 0)
      ++du;
    else
      throw DataError("trajectory CSV line 1: unexpected column \"" + header[i] + "\"");
  }
  if (dy == 0 || du == 0)
    throw DataError("trajectory CSV line 1: need at least one y_ and one u_ column");

  Trajectory traj;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_row(line);
    if (static_cast<int>(fields.size()) != 1 + dy + du)
      throw DataError("trajectory CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(1 + dy + du) + " fields, got " +
                      std::to_string(fields.size()));
    VectorXd y(dy), u(du);
    try {
      std::size_t pos = 0;
      for (int i = 0; i < dy; ++i) {
        y(i) = std::stod(fields[1 + i], &pos);
        if (pos != fields[1 + i].size()) throw std::invalid_argument(fields[1 + i]);
      }
      for (int i = 0; i < du; ++i) {
        u(i) = std::stod(fields[1 + dy + i], &pos);
        if (pos != fields[1 + dy + i].size()) throw std::invalid_argument(fields[1 + dy + i]);
      }
    } catch (const std::exception&) {
      throw DataError("trajectory CSV line " + std::to_string(line_no) +
                      ": non-numeric value");
    }
    traj.y.push_back(std::move(y));
    traj.u.push_back(std::move(u));
  }
  if (traj.y.empty()) throw DataError("trajectory CSV has a header but no data rows");
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_trajectory_csv(in);
}

}  // namespace marx
