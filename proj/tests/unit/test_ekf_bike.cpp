#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/error.hpp"
#include "oracles.hpp"

using namespace cooptrack;
using namespace cooptrack::ekf;

namespace {

constexpr double kT = 0.02;

BikeState S(double x, double y, double g, double gd, double v) { return {x, y, g, gd, v}; }

void expect_near(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      EXPECT_NEAR(a(i, j), b(i, j), tol) << "entry (" << i << ", " << j << ")";
    }
  }
}

double min_eigenvalue(const Matrix5& P) {
  return Eigen::SelfAdjointEigenSolver<Matrix5>(P).eigenvalues().minCoeff();
}

}  // namespace

TEST(PredictState, ZeroSpeedAndYawRateLeaveStateFixed) {
  const auto out = predict_state(S(1, 2, 0.5, 0, 0), kT);
  expect_near(out.to_vector(), S(1, 2, 0.5, 0, 0).to_vector(), 1e-15);
}

TEST(PredictState, StraightLine) {
  const auto out = predict_state(S(0, 0, 0, 0, 1), kT);
  expect_near(out.to_vector(), S(0.02, 0, 0, 0, 1).to_vector(), 1e-15);
}

TEST(PredictState, QuarterTurnRateMatchesRk4) {
  const Vector5 s0 = S(0, 0, 0, std::numbers::pi / 2, 2).to_vector();
  const auto out = predict_state(BikeState::from_vector(s0), kT).to_vector();
  const Eigen::VectorXd ref = oracle::rk4_constant_turn(s0, kT, 1e-6);
  expect_near(out, ref, 1e-7);
  EXPECT_NEAR(out(0), 0.039993, 1e-6);
  EXPECT_NEAR(out(1), 0.000628, 1e-6);
  EXPECT_NEAR(out(2), 0.031416, 1e-6);
}

TEST(PredictState, NormalizesYaw) {
  const auto out = predict_state(S(0, 0, std::numbers::pi - 0.01, 2.0, 1), kT);
  EXPECT_GT(out.gamma, -std::numbers::pi);
  EXPECT_LE(out.gamma, std::numbers::pi);
  EXPECT_NEAR(out.gamma, -std::numbers::pi + 0.03, 1e-12);
}

TEST(PredictState, RejectsNonFiniteInput) {
  EXPECT_THROW(predict_state(S(0, 0, 0, std::nan(""), 1), kT), InvalidArgument);
  EXPECT_THROW(predict_state(S(0, 0, 0, 0, 1), 0.0), InvalidArgument);
}

TEST(PredictState, ContinuousAcrossSmallYawRateBranch) {
  const auto limit = predict_state(S(1, -2, 0.7, 0.0, 3.0), kT).to_vector();
  const auto tiny = predict_state(S(1, -2, 0.7, 1e-9, 3.0), kT).to_vector();
  expect_near(tiny, limit, 1e-7);
  // Just either side of the branch threshold.
  const auto below = predict_state(S(1, -2, 0.7, 0.999e-6, 3.0), kT).to_vector();
  const auto above = predict_state(S(1, -2, 0.7, 1.001e-6, 3.0), kT).to_vector();
  // Inputs differ by 2e-9 in yaw rate, so only the position is compared.
  expect_near(below.head<2>(), above.head<2>(), 1e-9);
}

TEST(PredictState, CircleInvariant) {
  const double v = 2.0;
  const double w = 0.5;
  BikeState s = S(0, 0, 0, w, v);
  const double r = v / w;
  const Eigen::Vector2d center(0.0, r);
  for (int i = 0; i < 600; ++i) {
    s = predict_state(s, kT);
    EXPECT_NEAR((Eigen::Vector2d(s.x, s.y) - center).norm(), r, 1e-6);
  }
}

TEST(JacobianF, StraightLineRows) {
  const auto F = jacobian_f(S(0, 0, 0, 0, 1), kT);
  EXPECT_NEAR(F(kX, kSpeed), kT, 1e-15);
  EXPECT_NEAR(F(kX, kYaw), 0.0, 1e-15);
  EXPECT_NEAR(F(kY, kYaw), kT, 1e-15);
  // d y' / d gamma_dot = v T^2 / 2 on a straight line.
  EXPECT_NEAR(F(kY, kYawRate), 0.5 * kT * kT, 1e-15);
}

TEST(JacobianF, ConstantRowsForRateAndSpeed) {
  for (const auto& s : {S(0, 0, 0, 0, 1), S(3, 4, -2, 1.2, 7), S(0, 0, 1, -0.4, 0)}) {
    const auto F = jacobian_f(s, kT);
    EXPECT_EQ(F(kYawRate, kYawRate), 1.0);
    EXPECT_EQ(F(kSpeed, kSpeed), 1.0);
    EXPECT_EQ(F(kYaw, kYawRate), kT);
  }
}

TEST(JacobianF, MatchesFiniteDifferencesAtReferenceState) {
  const Vector5 s = S(0, 0, 0.3, 0.7, 1.5).to_vector();
  const auto fd = oracle::central_difference(
      [](const Eigen::VectorXd& x) { return oracle::bike_f(x, kT); }, s, 1e-6);
  expect_near(jacobian_f(BikeState::from_vector(s), kT), fd, 1e-6);
}

TEST(JacobianF, MatchesFiniteDifferencesOnRandomStates) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-50, 50), yaw(-3.0, 3.0), rate(1e-3, 3.0),
      speed(0.0, 10.0);
  std::bernoulli_distribution sign(0.5);
  for (int i = 0; i < 200; ++i) {
    Vector5 s;
    s << pos(rng), pos(rng), yaw(rng), (sign(rng) ? 1 : -1) * rate(rng), speed(rng);
    const auto fd = oracle::central_difference(
        [](const Eigen::VectorXd& x) { return oracle::bike_f(x, kT); }, s, 1e-6);
    expect_near(jacobian_f(BikeState::from_vector(s), kT), fd, 1e-5);
  }
}

TEST(JacobianF, SmallYawRateBranchMatchesFiniteDifferences) {
  // Below the threshold the branch must still give the exact derivative.
  const BikeState s = S(2, 1, -0.4, 0.0, 4.0);
  const auto fd = oracle::central_difference(
      [](const Eigen::VectorXd& x) { return predict_state(BikeState::from_vector(x), kT).to_vector(); },
      s.to_vector(), 1e-4);
  expect_near(jacobian_f(s, kT), fd, 1e-6);
}

TEST(NoiseGain, FixedRows) {
  for (const auto& s : {S(0, 0, 0, 0, 1), S(3, 4, -2, 1.2, 7)}) {
    const auto G = noise_gain(s, kT);
    EXPECT_EQ(G(kYawRate, 0), 1.0);
    EXPECT_EQ(G(kYawRate, 1), 0.0);
    EXPECT_EQ(G(kSpeed, 0), 0.0);
    EXPECT_EQ(G(kSpeed, 1), kT);
    EXPECT_EQ(G(kYaw, 0), kT);
  }
}

TEST(NoiseGain, StraightLineAccelerationColumn) {
  const auto G = noise_gain(S(0, 0, 0, 0, 1), kT);
  EXPECT_NEAR(G(kX, 1), 0.5 * kT * kT, 1e-15);
  EXPECT_NEAR(G(kX, 1), 2e-4, 1e-15);
}

TEST(NoiseGain, MatchesFiniteDifferencesOfNoisyTransition) {
  const Vector5 s = S(0, 0, 0.3, 0.7, 1.5).to_vector();
  const auto fd = oracle::central_difference(
      [&](const Eigen::VectorXd& w) { return oracle::bike_g(s, Eigen::Vector2d(w(0), w(1)), kT); },
      Eigen::VectorXd::Zero(2), 1e-7);
  expect_near(noise_gain(BikeState::from_vector(s), kT), fd, 1e-5);
}

TEST(NoisyTransition, ZeroNoiseEqualsPredict) {
  const auto s = S(1, 2, 0.3, 0.7, 1.5);
  expect_near(noisy_transition(s, Eigen::Vector2d::Zero(), kT).to_vector(),
              predict_state(s, kT).to_vector(), 1e-15);
  const Eigen::Vector2d w(0.2, -1.0);
  expect_near(noisy_transition(s, w, kT).to_vector(), oracle::bike_g(s.to_vector(), w, kT), 1e-12);
}

TEST(ProcessNoise, ZeroSigmasGiveZeroMatrix) {
  ProcessNoiseParams p;
  p.sigma_w_gamma_dot = 0.0;
  p.sigma_w_v_dot = 0.0;
  EXPECT_TRUE(process_noise_cov(S(0, 0, 0.3, 0.7, 1.5), p).isZero(0.0));
}

TEST(ProcessNoise, YawRateVarianceEntry) {
  const ProcessNoiseParams p;
  EXPECT_NEAR(process_noise_cov(S(4, 1, -1, 0.2, 3), p)(kYawRate, kYawRate), 1.5 * 1.5, 1e-15);
}

TEST(ProcessNoise, TripleProductWithFiniteDifferenceGain) {
  const ProcessNoiseParams p;
  const Vector5 s = S(0, 0, 0.3, 0.7, 1.5).to_vector();
  const Eigen::MatrixXd G = oracle::central_difference(
      [&](const Eigen::VectorXd& w) { return oracle::bike_g(s, Eigen::Vector2d(w(0), w(1)), kT); },
      Eigen::VectorXd::Zero(2), 1e-7);
  const Eigen::Matrix2d Qw = Eigen::Vector2d(1.5 * 1.5, 2.5 * 2.5).asDiagonal();
  const Eigen::MatrixXd ref = G * Qw * G.transpose();
  const auto Q = process_noise_cov(BikeState::from_vector(s), p);
  expect_near(Q, ref, 1e-6);
  EXPECT_TRUE(Q.isApprox(Q.transpose(), 0.0));
  EXPECT_GE(min_eigenvalue(Q), -1e-12);
}

TEST(ProcessNoise, DefaultsAndValidation) {
  const ProcessNoiseParams p;
  EXPECT_EQ(p.T, 0.020);
  EXPECT_EQ(p.sigma_w_gamma_dot, 1.5);
  EXPECT_EQ(p.sigma_w_v_dot, 2.5);
  ProcessNoiseParams bad;
  bad.T = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(EkfPredict, ZeroCovarianceAndNoiseStayZero) {
  ProcessNoiseParams p;
  p.sigma_w_gamma_dot = 0.0;
  p.sigma_w_v_dot = 0.0;
  const auto e = ekf_predict({S(0, 0, 0.2, 0.4, 3), Matrix5::Zero()}, p);
  EXPECT_TRUE(e.covariance.isZero(0.0));
}

TEST(EkfPredict, IdentityCovarianceMatchesHandProduct) {
  const ProcessNoiseParams p;
  const auto s = S(0, 0, 0, 0, 1);
  const auto e = ekf_predict({s, Matrix5::Identity()}, p);
  // Straight-line F written out by hand.
  Matrix5 F = Matrix5::Identity();
  F(0, 4) = kT;
  F(1, 2) = kT;
  F(1, 3) = 0.5 * kT * kT;
  F(2, 3) = kT;
  Eigen::Matrix<double, 5, 2> G = Eigen::Matrix<double, 5, 2>::Zero();
  G(0, 1) = 0.5 * kT * kT;
  G(1, 0) = 0.5 * kT * kT;
  G(2, 0) = kT;
  G(3, 0) = 1.0;
  G(4, 1) = kT;
  const Eigen::Matrix2d Qw = Eigen::Vector2d(1.5 * 1.5, 2.5 * 2.5).asDiagonal();
  Matrix5 ref = F * F.transpose() + G * Qw * G.transpose();
  expect_near(e.covariance, ref, 1e-12);
  expect_near(e.state.to_vector(), S(kT, 0, 0, 0, 1).to_vector(), 1e-15);
}

TEST(EkfPredict, TraceNonDecreasing) {
  const ProcessNoiseParams p;
  StateEstimate e{S(0, 0, 0.1, 0.3, 4), Matrix5::Identity() * 0.01};
  double trace = e.covariance.trace();
  for (int i = 0; i < 200; ++i) {
    e = ekf_predict(e, p);
    EXPECT_GE(e.covariance.trace(), trace - 1e-12);
    trace = e.covariance.trace();
  }
}

TEST(EkfUpdate, ZeroResidualKeepsStateAndShrinksCovariance) {
  const MeasurementNoiseParams n;
  const ProcessNoiseParams p;
  const StateEstimate e{S(1, 2, 0.3, 0.5, 3), Matrix5::Identity()};
  const auto out = ekf_update(e, Measurement::position_only(0.0, 1, 2), n, p);
  expect_near(out.state.to_vector(), e.state.to_vector(), 1e-12);
  const Matrix5 diff = e.covariance - out.covariance;
  EXPECT_GE(min_eigenvalue(diff), -1e-12);
}

TEST(EkfUpdate, HugeNoiseLeavesStateUnchanged) {
  MeasurementNoiseParams n;
  n.sigma_x = n.sigma_y = 1e9;
  const ProcessNoiseParams p;
  const StateEstimate e{S(1, 2, 0.3, 0.5, 3), Matrix5::Identity()};
  const auto out = ekf_update(e, Measurement::position_only(0.0, 50, -40), n, p);
  expect_near(out.state.to_vector(), e.state.to_vector(), 1e-6);
}

TEST(EkfUpdate, ScalarCaseMatchesOneDimensionalKalman) {
  MeasurementNoiseParams n;
  n.sigma_x = 1.0;
  n.sigma_y = 1.0;
  const ProcessNoiseParams p;
  Matrix5 P = Matrix5::Zero();
  P(0, 0) = 1.0;
  const StateEstimate e{S(0, 0, 0, 0, 0), P};
  const auto out = ekf_update(e, Measurement::position_only(0.0, 2.0, 0.0), n, p);
  const auto ref = oracle::kalman_1d(0.0, 1.0, 2.0, 1.0);
  EXPECT_NEAR(out.state.x, ref.mean, 1e-12);
  EXPECT_NEAR(out.covariance(0, 0), ref.var, 1e-12);
  EXPECT_NEAR(out.state.x, 1.0, 1e-12);
  EXPECT_NEAR(out.covariance(0, 0), 0.5, 1e-12);
}

TEST(EkfUpdate, DeviceOnlyWithoutCrossCovarianceKeepsPosition) {
  const MeasurementNoiseParams n;
  const ProcessNoiseParams p;
  Matrix5 P = Matrix5::Identity();
  const StateEstimate e{S(5, -3, 0.2, 0.1, 2), P};
  const auto out = ekf_update(e, Measurement::device_only(0.0, 0.8, 4.0, 0.3), n, p);
  EXPECT_EQ(out.state.x, 5.0);
  EXPECT_EQ(out.state.y, -3.0);
  EXPECT_EQ(out.state.gamma, 0.2);
  EXPECT_GT(out.state.gamma_dot, 0.1);
  EXPECT_GT(out.state.v, 2.0);
}

TEST(EkfUpdate, DeviceRowsUseNoiseDividedByT) {
  const MeasurementNoiseParams n;
  const auto m = Measurement::position_and_device(0.0, 1, 2, 0.1, 3, 0.4);
  const auto R = measurement_noise(m, n, kT);
  ASSERT_EQ(R.rows(), 4);
  EXPECT_NEAR(R(0, 0), 0.15 * 0.15, 1e-15);
  EXPECT_NEAR(R(1, 1), 0.15 * 0.15, 1e-15);
  EXPECT_NEAR(R(2, 2), std::pow(0.3 / kT, 2), 1e-9);
  EXPECT_NEAR(R(3, 3), std::pow(0.4 / kT, 2), 1e-9);

  MeasurementNoiseParams plain = n;
  plain.r_divide_by_T = false;
  const auto R2 = measurement_noise(m, plain, kT);
  EXPECT_NEAR(R2(3, 3), 0.16, 1e-15);
}

TEST(EkfUpdate, SigmaVFloorApplied) {
  const MeasurementNoiseParams n;
  const auto R = measurement_noise(Measurement::device_only(0.0, 0.0, 1.0, 0.0), n, kT);
  EXPECT_NEAR(R(1, 1), std::pow(kSigmaVFloor / kT, 2), 1e-9);
}

TEST(EkfUpdate, MeasurementMatrixShapes) {
  EXPECT_EQ(measurement_matrix(MeasurementKind::PositionAndDevice).rows(), 4);
  EXPECT_EQ(measurement_matrix(MeasurementKind::DeviceOnly).rows(), 2);
  EXPECT_EQ(measurement_matrix(MeasurementKind::PositionOnly).rows(), 2);
  const auto H = measurement_matrix(MeasurementKind::DeviceOnly);
  EXPECT_TRUE(H.col(kX).isZero(0.0));
  EXPECT_TRUE(H.col(kY).isZero(0.0));
}

TEST(EkfUpdate, MeasurementFieldsMustMatchKind) {
  Measurement m = Measurement::position_only(0.0, 1, 2);
  m.v = 3.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(EkfUpdate, CovarianceStaysSymmetricPsdOverLongRun) {
  const MeasurementNoiseParams n;
  const ProcessNoiseParams p;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.15);
  StateEstimate e = newborn_estimate(0, 0, n);
  BikeState truth = S(0, 0, 0.4, 0.3, 4);
  for (int k = 0; k < 1500; ++k) {
    truth = predict_state(truth, kT);
    e = ekf_predict(e, p);
    if (k % 3 == 0) {
      e = ekf_update(e, Measurement::position_and_device(k * kT, truth.x + noise(rng), truth.y + noise(rng),
                                                         0.3, 4.0, 0.3),
                     n, p);
    } else if (k % 3 == 1) {
      e = ekf_update(e, Measurement::position_only(k * kT, truth.x + noise(rng), truth.y + noise(rng)), n, p);
    } else {
      e = ekf_update(e, Measurement::device_only(k * kT, 0.3, 4.0, 0.3), n, p);
    }
    EXPECT_LT((e.covariance - e.covariance.transpose()).cwiseAbs().rowwise().sum().maxCoeff(), 1e-9);
    EXPECT_GT(min_eigenvalue(e.covariance), -1e-9);
    EXPECT_GT(e.state.gamma, -std::numbers::pi);
    EXPECT_LE(e.state.gamma, std::numbers::pi);
  }
  EXPECT_LT(std::hypot(e.state.x - truth.x, e.state.y - truth.y), 0.3);
}

TEST(Newborn, Covariance) {
  const MeasurementNoiseParams n;
  const auto e = newborn_estimate(3, 4, n);
  EXPECT_EQ(e.state.x, 3.0);
  EXPECT_EQ(e.state.y, 4.0);
  const Vector5 diag = e.covariance.diagonal();
  expect_near(diag, (Vector5() << 0.0225, 0.0225, std::pow(std::numbers::pi / 2, 2), 1.0, 4.0).finished(),
              1e-15);
}

TEST(NormalizeAngle, Range) {
  EXPECT_NEAR(normalize_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(normalize_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(normalize_angle(0.5), 0.5, 0.0);
  EXPECT_NEAR(normalize_angle(-7.0), -7.0 + 2 * std::numbers::pi, 1e-12);
}
