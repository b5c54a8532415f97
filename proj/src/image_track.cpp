#include "cooptrack/image_track.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "cooptrack/error.hpp"

namespace cooptrack::image {

void PixelNoiseParams::validate() const {
  if (!(r_px > 0.0) || !(q_px >= 0.0) || !(initial_speed_std > 0.0)) {
    throw InvalidArgument("pixel noise parameters must be positive");
  }
}

Matrix4 cv_process_noise(double dt, double q_px) {
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  Matrix4 Q = Matrix4::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    Q(axis, axis) = q_px * dt3 / 3.0;
    Q(axis, axis + 2) = q_px * dt2 / 2.0;
    Q(axis + 2, axis) = q_px * dt2 / 2.0;
    Q(axis + 2, axis + 2) = q_px * dt;
  }
  return Q;
}

PixelState cv_predict(const PixelState& s, double dt, double q_px) {
  if (!(dt > 0.0)) throw InvalidArgument("cv_predict requires dt > 0");
  Matrix4 F = Matrix4::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  PixelState out;
  out.mean = F * s.mean;
  out.covariance = F * s.covariance * F.transpose() + cv_process_noise(dt, q_px);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

PixelState cv_update(const PixelState& s, const Eigen::Vector2d& detection, double r_px) {
  if (!detection.allFinite()) throw InvalidArgument("cv_update: non-finite detection");
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * r_px * r_px;
  const Eigen::Matrix2d S = H * s.covariance * H.transpose() + R;
  const Eigen::LLT<Eigen::Matrix2d> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite()) {
    throw NumericalError("cv_update: innovation covariance is not invertible");
  }
  const Eigen::Matrix<double, 4, 2> K = llt.solve(H * s.covariance).transpose();
  PixelState out;
  out.mean = s.mean + K * (detection - H * s.mean);
  const Matrix4 I_KH = Matrix4::Identity() - K * H;
  out.covariance = I_KH * s.covariance * I_KH.transpose() + K * R * K.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

PixelState cv_newborn(const Eigen::Vector2d& detection, const PixelNoiseParams& params) {
  params.validate();
  PixelState s;
  s.mean << detection(0), detection(1), 0.0, 0.0;
  const double r2 = params.r_px * params.r_px;
  const double v2 = params.initial_speed_std * params.initial_speed_std;
  s.covariance.diagonal() << r2, r2, v2, v2;
  return s;
}

}  // namespace cooptrack::image
