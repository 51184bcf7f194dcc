#include <doctest.h>

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "marx/simulators.hpp"
#include "oracles.hpp"

using namespace marx;

TEST_CASE("butterworth order 1 has a stable single pole") {
  const auto c = butterworth_ar_coefficients(1, 20.0, 100.0);
  REQUIRE(c.size() == 1);
  CHECK(std::abs(c[0]) < 1.0);
  // Frozen filter-design oracle value (20 Hz cutoff at 100 Hz sampling).
  CHECK(c[0] == doctest::Approx(0.15838444032453627).epsilon(1e-10));
}

TEST_CASE("butterworth order 2 matches the frozen design oracle") {
  const auto c = butterworth_ar_coefficients(2, 20.0, 100.0);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(0.3695273773512414).epsilon(1e-10));
  CHECK(c[1] == doctest::Approx(-0.19581571265583306).epsilon(1e-10));
}

TEST_CASE("butterworth order 4 matches the frozen design oracle") {
  const auto c = butterworth_ar_coefficients(4, 20.0, 100.0);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == doctest::Approx(0.7820951980233375).epsilon(1e-9));
  CHECK(c[1] == doctest::Approx(-0.6799785269162995).epsilon(1e-9));
  CHECK(c[2] == doctest::Approx(0.18267569775303227).epsilon(1e-9));
  CHECK(c[3] == doctest::Approx(-0.030118875043169235).epsilon(1e-9));
}

TEST_CASE("butterworth rejects cutoffs at or above Nyquist") {
  CHECK_THROWS_AS(butterworth_ar_coefficients(2, 50.0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(butterworth_ar_coefficients(2, 60.0, 100.0), std::invalid_argument);
}

TEST_CASE("gen_true_coefficients: zero cross-std leaves only self connections") {
  std::mt19937_64 rng(1);
  const auto truth = gen_true_coefficients(2, 3, 2, 2, 20.0, 100.0, 0.0,
                                           MatrixXd::Identity(2, 2), rng);
  const auto self = butterworth_ar_coefficients(2, 20.0, 100.0);
  for (int i = 0; i < truth.A_true.rows(); ++i)
    for (int j = 0; j < truth.A_true.cols(); ++j) {
      bool is_self = false;
      for (int lag = 1; lag <= 2; ++lag)
        if (i == (lag - 1) * 2 + j) {
          is_self = true;
          CHECK(truth.A_true(i, j) == self[lag - 1]);
        }
      if (!is_self) CHECK(truth.A_true(i, j) == 0.0);
    }
}

TEST_CASE("generated systems are stable and match the verification dimensions") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::mt19937_64 rng(seed);
    const auto truth = gen_true_coefficients(2, 3, 2, 2, 20.0, 100.0, 0.1,
                                             MatrixXd::Identity(2, 2), rng);
    CHECK(truth.A_true.rows() == 10);  // N_y*D_y + N_u*D_u
    CHECK(truth.A_true.cols() == 2);
    CHECK(companion_spectral_radius(truth.A_true, 2, 2) < 1.0);
    RegressorBuffer buffer(truth.n_y_lags, truth.n_u_lags, truth.dim_y, truth.dim_u);
    CHECK(buffer.regressor(VectorXd::Zero(2)).size() == 10);
  }
}

TEST_CASE("unstable draws are rejected, counted and still end in a stable system") {
  std::clog.setstate(std::ios_base::badbit);  // silence per-rejection log lines
  int total_rejections = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const auto truth = gen_true_coefficients(2, 2, 2, 2, 20.0, 100.0, 0.8,
                                             MatrixXd::Identity(2, 2), rng);
    total_rejections += truth.stability_rejections;
    CHECK(companion_spectral_radius(truth.A_true, 2, 2) < 1.0);
  }
  std::clog.clear();
  CHECK(total_rejections > 0);
}

TEST_CASE("gen_true_coefficients gives up after the retry budget") {
  std::clog.setstate(std::ios_base::badbit);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(gen_true_coefficients(2, 2, 2, 2, 20.0, 100.0, 50.0,
                                        MatrixXd::Identity(2, 2), rng, 3),
                  NumericalError);
  std::clog.clear();
}

TEST_CASE("marx_step: vanishing noise reproduces the deterministic map") {
  std::mt19937_64 rng(2);
  auto truth = gen_true_coefficients(2, 3, 2, 2, 20.0, 100.0, 0.1,
                                     1e12 * MatrixXd::Identity(2, 2), rng);
  RegressorBuffer buffer(2, 3, 2, 2);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    VectorXd u(2);
    u << n01(rng), n01(rng);
    const VectorXd x = buffer.regressor(u);
    const VectorXd y = marx_step(truth, buffer, u, rng);
    CHECK((y - truth.A_true.transpose() * x).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("marx_step noise covariance matches the inverse of the paper precision") {
  MarxSystemTruth truth;
  truth.A_true = MatrixXd::Zero(10, 2);
  truth.W_true = (MatrixXd(2, 2) << 300.0, 100.0, 100.0, 200.0).finished();
  truth.n_y_lags = 2;
  truth.n_u_lags = 3;
  truth.dim_y = 2;
  truth.dim_u = 2;
  RegressorBuffer buffer(2, 3, 2, 2);
  std::mt19937_64 rng(3);
  const int n = 100000;
  VectorXd sum = VectorXd::Zero(2);
  MatrixXd sum_sq = MatrixXd::Zero(2, 2);
  std::vector<VectorXd> ys;
  ys.reserve(n);
  for (int t = 0; t < n; ++t) {
    const VectorXd y = marx_step(truth, buffer, VectorXd::Zero(2), rng);
    ys.push_back(y);
    sum += y;
  }
  const VectorXd mean = sum / n;
  for (const auto& y : ys) sum_sq += (y - mean) * (y - mean).transpose();
  const MatrixXd cov = sum_sq / (n - 1);
  const MatrixXd expected = truth.W_true.inverse();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se =
          std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) / n);
      CHECK(std::abs(cov(i, j) - expected(i, j)) < 4.0 * se);
    }
}

TEST_CASE("marx trajectories are reproducible for a fixed seed") {
  auto simulate = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto truth = gen_true_coefficients(2, 3, 2, 2, 20.0, 100.0, 0.1,
                                       (MatrixXd(2, 2) << 300, 100, 100, 200).finished(), rng);
    RegressorBuffer buffer(2, 3, 2, 2);
    std::normal_distribution<double> n01;
    VectorXd last;
    for (int t = 0; t < 50; ++t) {
      VectorXd u(2);
      u << n01(rng), n01(rng);
      last = marx_step(truth, buffer, u, rng);
    }
    return last;
  };
  CHECK((simulate(42) - simulate(42)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((simulate(42) - simulate(43)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("msd_step keeps the equilibrium fixed") {
  MsdState state;  // zero positions and velocities, default constants
  const MsdState next = msd_step(state, Eigen::Vector2d::Zero());
  CHECK(next.z.cwiseAbs().maxCoeff() == 0.0);
  CHECK(next.z_dot.cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.params.dt == 0.05);
}

TEST_CASE("undamped Euler energy drift is one-sided and shrinks with the step") {
  auto energy = [](const MsdState& s) {
    const auto& p = s.params;
    const double elastic =
        0.5 * p.k1 * s.z(0) * s.z(0) + 0.5 * p.k2 * (s.z(1) - s.z(0)) * (s.z(1) - s.z(0));
    const double kinetic =
        0.5 * p.m1 * s.z_dot(0) * s.z_dot(0) + 0.5 * p.m2 * s.z_dot(1) * s.z_dot(1);
    return elastic + kinetic;
  };
  MsdState coarse;
  coarse.params.c1 = coarse.params.c2 = 0.0;
  coarse.z << 1.0, -0.5;
  MsdState fine = coarse;
  fine.params.dt = coarse.params.dt / 100.0;
  const double e0 = energy(coarse);

  double previous = e0;
  for (int t = 0; t < 1000; ++t) {
    coarse = msd_step(coarse, Eigen::Vector2d::Zero());
    const double e = energy(coarse);
    CHECK(e >= previous - 1e-12 * e0);  // forward Euler only injects energy
    previous = e;
  }
  for (int t = 0; t < 1000 * 100; ++t) fine = msd_step(fine, Eigen::Vector2d::Zero());

  const double coarse_drift = energy(coarse) / e0 - 1.0;
  const double fine_drift = energy(fine) / e0 - 1.0;
  CHECK(coarse_drift > 0.0);
  CHECK(fine_drift > 0.0);
  CHECK(fine_drift < coarse_drift / 10.0);   // first-order drift shrinks with dt
  CHECK(coarse_drift < 1000.0);              // bounded over the test horizon
}

TEST_CASE("msd_observe reduces to the position in the high-precision limit") {
  std::mt19937_64 rng(4);
  MsdState state;
  state.z << 0.3, -0.7;
  const Eigen::Vector2d y = msd_observe(state, 1e12 * MatrixXd::Identity(2, 2), rng);
  CHECK((y - state.z).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("msd_observe noise covariance matches the inverse precision") {
  std::mt19937_64 rng(5);
  MsdState state;
  const MatrixXd precision = (MatrixXd(2, 2) << 50.0, 10.0, 10.0, 80.0).finished();
  const MatrixXd expected = precision.inverse();
  const int n = 100000;
  MatrixXd sum_sq = MatrixXd::Zero(2, 2);
  VectorXd sum = VectorXd::Zero(2);
  std::vector<Eigen::Vector2d> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) {
    draws.push_back(msd_observe(state, precision, rng));
    sum += draws.back();
  }
  const VectorXd mean = sum / n;
  for (const auto& d : draws) sum_sq += (d - mean) * (d - mean).transpose();
  const MatrixXd cov = sum_sq / (n - 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se =
          std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) / n);
      CHECK(std::abs(cov(i, j) - expected(i, j)) < 4.0 * se);
    }
}

TEST_CASE("msd_observe is deterministic given the rng state") {
  MsdState state;
  state.z << 1.0, 2.0;
  std::mt19937_64 rng_a(9), rng_b(9);
  CHECK((msd_observe(state, MatrixXd::Identity(2, 2), rng_a) -
         msd_observe(state, MatrixXd::Identity(2, 2), rng_b))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("input_signal: zero std gives identically zero input") {
  InputSignalConfig config;
  config.std_dev = 0.0;
  std::mt19937_64 rng(1);
  for (long t = 0; t < 10; ++t)
    CHECK(input_signal(t, config, 2, rng).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input_signal: gaussian mode has mean zero") {
  InputSignalConfig config;
  config.std_dev = 1.0;
  std::mt19937_64 rng(2);
  double sum = 0.0;
  const int n = 100000;
  for (long t = 0; t < n; ++t) sum += input_signal(t, config, 1, rng)(0);
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("input_signal: identical seeds give identical sequences") {
  InputSignalConfig config;
  std::mt19937_64 rng_a(3), rng_b(3);
  for (long t = 0; t < 20; ++t)
    CHECK((input_signal(t, config, 2, rng_a) - input_signal(t, config, 2, rng_b))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("input_signal: sine sweep is deterministic and bounded") {
  InputSignalConfig config;
  config.kind = "sine_sweep";
  config.amplitude = 2.0;
  std::mt19937_64 rng(4);
  for (long t = 0; t < 2000; t += 50) {
    const VectorXd u = input_signal(t, config, 2, rng);
    CHECK(u.cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
  }
}

TEST_CASE("input_signal rejects an unknown generator") {
  InputSignalConfig config;
  config.kind = "square_wave";
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(input_signal(0, config, 2, rng), ConfigError);
}

TEST_CASE("trajectory CSV round-trips losslessly") {
  std::mt19937_64 rng(6);
  Trajectory traj;
  for (int t = 0; t < 12; ++t) {
    traj.y.push_back(oracles::random_vector(2, rng));
    traj.u.push_back(oracles::random_vector(2, rng));
  }
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  const Trajectory back = read_trajectory_csv(ss);
  REQUIRE(back.y.size() == traj.y.size());
  for (std::size_t t = 0; t < traj.y.size(); ++t) {
    CHECK((back.y[t] - traj.y[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.u[t] - traj.u[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("trajectory CSV errors name the offending line") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_trajectory_csv(empty), DataError);

  std::stringstream missing_field("t,y_1,u_1\n1,0.5\n");
  CHECK_THROWS_WITH_AS(read_trajectory_csv(missing_field),
                       doctest::Contains("line 2"), DataError);

  std::stringstream bad_number("t,y_1,u_1\n1,0.5,2.0\n2,zap,1.0\n");
  CHECK_THROWS_WITH_AS(read_trajectory_csv(bad_number), doctest::Contains("line 3"), DataError);

  std::stringstream header_only("t,y_1,u_1\n");
  CHECK_THROWS_AS(read_trajectory_csv(header_only), DataError);
}
