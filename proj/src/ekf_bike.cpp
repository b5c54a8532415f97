#include "cooptrack/ekf_bike.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cooptrack/error.hpp"

namespace cooptrack::ekf {

namespace {

// Turn-rate kernels of the arc displacement, written in terms of
// theta = gamma_dot * T:
//   a = v T sin(theta)/theta,  b = v T (1 - cos(theta))/theta.
// The derivatives are taken with respect to theta.
struct ArcKernel {
  double s1;   // sin(theta)/theta
  double c1;   // (1 - cos(theta))/theta
  double ds1;  // d s1 / d theta
  double dc1;  // d c1 / d theta
};

ArcKernel arc_kernel(double yaw_rate, double T) {
  const double th = yaw_rate * T;
  if (std::abs(yaw_rate) < kYawRateEpsilon) {
    const double th2 = th * th;
    return {1.0 - th2 / 6.0, th / 2.0 - th * th2 / 24.0, -th / 3.0, 0.5 - th2 / 8.0};
  }
  const double s = std::sin(th);
  const double c = std::cos(th);
  const double half = std::sin(0.5 * th);
  const double one_minus_cos = 2.0 * half * half;
  const double th2 = th * th;
  return {s / th, one_minus_cos / th, (th * c - s) / th2, (th * s - one_minus_cos) / th2};
}

void require_finite(const BikeState& s, double T) {
  if (!s.is_finite()) {
    throw InvalidArgument("bike state has non-finite fields");
  }
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw InvalidArgument("filter step T must be positive, got " + std::to_string(T));
  }
}

void require_psd(const Matrix5& P, const char* where) {
  Eigen::SelfAdjointEigenSolver<Matrix5> eig(P, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || !P.allFinite()) {
    throw NumericalError(std::string(where) + ": covariance eigen decomposition failed");
  }
  const double lowest = eig.eigenvalues().minCoeff();
  if (lowest < -1e-6) {
    throw NumericalError(std::string(where) + ": covariance eigenvalue " +
                         std::to_string(lowest) + " below -1e-6");
  }
}

}  // namespace

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

bool BikeState::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(gamma) &&
         std::isfinite(gamma_dot) && std::isfinite(v);
}

void ProcessNoiseParams::validate() const {
  // Zero noise is accepted for deterministic experiments.
  if (!(sigma_w_gamma_dot >= 0.0) || !(sigma_w_v_dot >= 0.0) || !std::isfinite(sigma_w_gamma_dot) ||
      !std::isfinite(sigma_w_v_dot)) {
    throw InvalidArgument("process noise standard deviations must be finite and >= 0");
  }
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw InvalidArgument("process noise step T must be positive");
  }
}

void MeasurementNoiseParams::validate() const {
  for (double s : {sigma_x, sigma_y, sigma_gamma_dot}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("measurement noise standard deviations must be positive");
    }
  }
}

Measurement Measurement::position_only(double t, double x, double y) {
  Measurement m;
  m.kind = MeasurementKind::PositionOnly;
  m.position = Eigen::Vector2d(x, y);
  m.timestamp = t;
  return m;
}

Measurement Measurement::device_only(double t, double gamma_dot, double v, double sigma_v) {
  Measurement m;
  m.kind = MeasurementKind::DeviceOnly;
  m.gamma_dot = gamma_dot;
  m.v = v;
  m.sigma_v = sigma_v;
  m.timestamp = t;
  return m;
}

Measurement Measurement::position_and_device(double t, double x, double y, double gamma_dot,
                                             double v, double sigma_v) {
  Measurement m = device_only(t, gamma_dot, v, sigma_v);
  m.kind = MeasurementKind::PositionAndDevice;
  m.position = Eigen::Vector2d(x, y);
  return m;
}

void Measurement::validate() const {
  const bool wants_position = kind != MeasurementKind::DeviceOnly;
  const bool wants_device = kind != MeasurementKind::PositionOnly;
  if (position.has_value() != wants_position) {
    throw InvalidArgument("measurement position presence does not match its kind");
  }
  if (gamma_dot.has_value() != wants_device || v.has_value() != wants_device ||
      sigma_v.has_value() != wants_device) {
    throw InvalidArgument("measurement device fields do not match its kind");
  }
  if (position && !position->allFinite()) throw InvalidArgument("non-finite position");
  if (wants_device && (!std::isfinite(*gamma_dot) || !std::isfinite(*v) ||
                       !std::isfinite(*sigma_v) || *sigma_v < 0.0)) {
    throw InvalidArgument("non-finite or negative device measurement");
  }
}

BikeState predict_state(const BikeState& s, double T) {
  return noisy_transition(s, Eigen::Vector2d::Zero(), T);
}

BikeState noisy_transition(const BikeState& s, const Eigen::Vector2d& w, double T) {
  require_finite(s, T);
  const double yaw_rate = s.gamma_dot + w(0);
  const double speed = s.v + 0.5 * T * w(1);
  const ArcKernel k = arc_kernel(yaw_rate, T);
  const double a = speed * T * k.s1;
  const double b = speed * T * k.c1;
  const double cg = std::cos(s.gamma);
  const double sg = std::sin(s.gamma);

  BikeState out;
  out.x = s.x + cg * a - sg * b;
  out.y = s.y + sg * a + cg * b;
  out.gamma = normalize_angle(s.gamma + yaw_rate * T);
  out.gamma_dot = yaw_rate;
  out.v = s.v + w(1) * T;
  return out;
}

Matrix5 jacobian_f(const BikeState& s, double T) {
  require_finite(s, T);
  const ArcKernel k = arc_kernel(s.gamma_dot, T);
  const double a = s.v * T * k.s1;
  const double b = s.v * T * k.c1;
  const double da_dyr = s.v * T * T * k.ds1;
  const double db_dyr = s.v * T * T * k.dc1;
  const double da_dv = T * k.s1;
  const double db_dv = T * k.c1;
  const double cg = std::cos(s.gamma);
  const double sg = std::sin(s.gamma);

  Matrix5 F = Matrix5::Identity();
  F(kX, kYaw) = -sg * a - cg * b;
  F(kX, kYawRate) = cg * da_dyr - sg * db_dyr;
  F(kX, kSpeed) = cg * da_dv - sg * db_dv;
  F(kY, kYaw) = cg * a - sg * b;
  F(kY, kYawRate) = sg * da_dyr + cg * db_dyr;
  F(kY, kSpeed) = sg * da_dv + cg * db_dv;
  F(kYaw, kYawRate) = T;
  return F;
}

Matrix52 noise_gain(const BikeState& s, double T) {
  require_finite(s, T);
  const ArcKernel k = arc_kernel(s.gamma_dot, T);
  const double cg = std::cos(s.gamma);
  const double sg = std::sin(s.gamma);
  const double da_dyr = s.v * T * T * k.ds1;
  const double db_dyr = s.v * T * T * k.dc1;
  // The acceleration enters the arc through the mean speed v + T w / 2.
  const double da_dacc = 0.5 * T * T * k.s1;
  const double db_dacc = 0.5 * T * T * k.c1;

  Matrix52 G = Matrix52::Zero();
  G(kX, 0) = cg * da_dyr - sg * db_dyr;
  G(kY, 0) = sg * da_dyr + cg * db_dyr;
  G(kYaw, 0) = T;
  G(kYawRate, 0) = 1.0;
  G(kX, 1) = cg * da_dacc - sg * db_dacc;
  G(kY, 1) = sg * da_dacc + cg * db_dacc;
  G(kSpeed, 1) = T;
  return G;
}

Matrix5 process_noise_cov(const BikeState& s, const ProcessNoiseParams& p) {
  p.validate();
  const Matrix52 G = noise_gain(s, p.T);
  const Eigen::Vector2d q(p.sigma_w_gamma_dot * p.sigma_w_gamma_dot,
                          p.sigma_w_v_dot * p.sigma_w_v_dot);
  Matrix5 Q = G * q.asDiagonal() * G.transpose();
  return symmetrize(Q);
}

Matrix5& symmetrize(Matrix5& P) {
  P = 0.5 * (P + P.transpose()).eval();
  return P;
}

StateEstimate ekf_predict(const StateEstimate& e, const ProcessNoiseParams& p) {
  p.validate();
  const Matrix5 F = jacobian_f(e.state, p.T);
  StateEstimate out;
  out.state = predict_state(e.state, p.T);
  out.covariance = F * e.covariance * F.transpose() + process_noise_cov(e.state, p);
  symmetrize(out.covariance);
  require_psd(out.covariance, "ekf_predict");
  return out;
}

Eigen::MatrixXd measurement_matrix(MeasurementKind kind) {
  Eigen::MatrixXd H;
  switch (kind) {
    case MeasurementKind::PositionAndDevice:
      H = Eigen::MatrixXd::Zero(4, 5);
      H(0, kX) = 1.0;
      H(1, kY) = 1.0;
      H(2, kYawRate) = 1.0;
      H(3, kSpeed) = 1.0;
      break;
    case MeasurementKind::DeviceOnly:
      H = Eigen::MatrixXd::Zero(2, 5);
      H(0, kYawRate) = 1.0;
      H(1, kSpeed) = 1.0;
      break;
    case MeasurementKind::PositionOnly:
      H = Eigen::MatrixXd::Zero(2, 5);
      H(0, kX) = 1.0;
      H(1, kY) = 1.0;
      break;
  }
  return H;
}

Eigen::MatrixXd measurement_noise(const Measurement& m, const MeasurementNoiseParams& n,
                                  double T) {
  m.validate();
  n.validate();
  const double scale = n.r_divide_by_T ? 1.0 / T : 1.0;
  Eigen::VectorXd diag;
  const auto device_rows = [&](double sigma_v) {
    const double sv = std::max(sigma_v, kSigmaVFloor);
    return Eigen::Vector2d(std::pow(n.sigma_gamma_dot * scale, 2), std::pow(sv * scale, 2));
  };
  switch (m.kind) {
    case MeasurementKind::PositionAndDevice:
      diag.resize(4);
      diag << n.sigma_x * n.sigma_x, n.sigma_y * n.sigma_y, device_rows(*m.sigma_v);
      break;
    case MeasurementKind::DeviceOnly:
      diag = device_rows(*m.sigma_v);
      break;
    case MeasurementKind::PositionOnly:
      diag.resize(2);
      diag << n.sigma_x * n.sigma_x, n.sigma_y * n.sigma_y;
      break;
  }
  return diag.asDiagonal();
}

Eigen::VectorXd measurement_vector(const Measurement& m) {
  m.validate();
  Eigen::VectorXd z;
  switch (m.kind) {
    case MeasurementKind::PositionAndDevice:
      z.resize(4);
      z << (*m.position)(0), (*m.position)(1), *m.gamma_dot, *m.v;
      break;
    case MeasurementKind::DeviceOnly:
      z.resize(2);
      z << *m.gamma_dot, *m.v;
      break;
    case MeasurementKind::PositionOnly:
      z = *m.position;
      break;
  }
  return z;
}

StateEstimate ekf_update(const StateEstimate& e, const Measurement& m,
                         const MeasurementNoiseParams& n, const ProcessNoiseParams& p) {
  p.validate();
  if (!e.state.is_finite()) throw InvalidArgument("bike state has non-finite fields");

  const Eigen::MatrixXd H = measurement_matrix(m.kind);
  const Eigen::MatrixXd R = measurement_noise(m, n, p.T);
  const Eigen::VectorXd z = measurement_vector(m);
  const Vector5 x = e.state.to_vector();
  const Matrix5& P = e.covariance;

  const Eigen::VectorXd residual = z - H * x;
  const Eigen::MatrixXd S = H * P * H.transpose() + R;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite()) {
    throw NumericalError("ekf_update: innovation covariance is not invertible");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::MatrixXd K = llt.solve(H * P).transpose();

  StateEstimate out;
  Vector5 xn = x + K * residual;
  xn(kYaw) = normalize_angle(xn(kYaw));
  out.state = BikeState::from_vector(xn);

  // Joseph form keeps P positive semidefinite under rounding.
  const Matrix5 I_KH = Matrix5::Identity() - K * H;
  out.covariance = I_KH * P * I_KH.transpose() + K * R * K.transpose();
  symmetrize(out.covariance);
  require_psd(out.covariance, "ekf_update");
  return out;
}

StateEstimate newborn_estimate(double x, double y, const MeasurementNoiseParams& n) {
  StateEstimate e;
  e.state = BikeState{x, y, 0.0, 0.0, 0.0};
  const double half_pi = 0.5 * std::numbers::pi;
  e.covariance.diagonal() << n.sigma_x * n.sigma_x, n.sigma_y * n.sigma_y, half_pi * half_pi,
      1.0, 4.0;
  return e;
}

}  // namespace cooptrack::ekf
