#include <doctest.h>

#include <random>

#include "marx/rls.hpp"
#include "oracles.hpp"

using namespace marx;

TEST_CASE("rls_update with a zero regressor is a no-op") {
  std::mt19937_64 rng(1);
  RlsState state = make_rls_state(4, 2);
  state.A_hat = oracles::random_matrix(4, 2, rng);
  const RlsState next = rls_update(state, VectorXd::Zero(4), oracles::random_vector(2, rng));
  CHECK((next.P - state.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK((next.A_hat - state.A_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rls_update reproduces the scalar worked example") {
  const RlsState next = rls_update(make_rls_state(1, 1), VectorXd::Constant(1, 1.0),
                                   VectorXd::Constant(1, 1.0));
  CHECK(next.P(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.A_hat(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("P matches the batch Sherman-Morrison inverse") {
  std::mt19937_64 rng(2);
  RlsState state = make_rls_state(5, 2);
  MatrixXd information = MatrixXd::Identity(5, 5);  // P0^{-1}
  for (int t = 0; t < 60; ++t) {
    const VectorXd x = oracles::random_vector(5, rng);
    state = rls_update(state, x, oracles::random_vector(2, rng));
    information += x * x.transpose();
  }
  const MatrixXd batch = information.inverse();
  CHECK((state.P - batch).cwiseAbs().maxCoeff() < 1e-9 * batch.cwiseAbs().maxCoeff());
}

TEST_CASE("eigenvalues of P never increase") {
  std::mt19937_64 rng(3);
  RlsState state = make_rls_state(4, 1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(state.P);
  double previous_max = eig.eigenvalues().maxCoeff();
  for (int t = 0; t < 30; ++t) {
    const RlsState next =
        rls_update(state, oracles::random_vector(4, rng), oracles::random_vector(1, rng));
    // P_t <= P_{t-1} in the PSD order.
    const Eigen::SelfAdjointEigenSolver<MatrixXd> diff(state.P - next.P);
    CHECK(diff.eigenvalues().minCoeff() > -1e-12);
    eig.compute(next.P);
    CHECK(eig.eigenvalues().maxCoeff() <= previous_max + 1e-12);
    previous_max = eig.eigenvalues().maxCoeff();
    state = next;
  }
}

TEST_CASE("repeated identical pairs drive the prediction to y") {
  RlsState state = make_rls_state(2, 1);
  VectorXd x(2), y(1);
  x << 1.0, -0.5;
  y << 2.0;
  for (int t = 0; t < 2000; ++t) state = rls_update(state, x, y);
  CHECK((rls_predict(state, x) - y).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("rls_predict basics") {
  std::mt19937_64 rng(4);
  RlsState state = make_rls_state(3, 2);
  CHECK(rls_predict(state, oracles::random_vector(3, rng)).cwiseAbs().maxCoeff() == 0.0);
  state.A_hat = oracles::random_matrix(3, 2, rng);
  CHECK(rls_predict(state, VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
  RlsState scalar = make_rls_state(1, 1);
  scalar.A_hat(0, 0) = 0.5;
  CHECK(rls_predict(scalar, VectorXd::Constant(1, 2.0))(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rls_predict(state, VectorXd::Zero(4)), std::invalid_argument);
}
