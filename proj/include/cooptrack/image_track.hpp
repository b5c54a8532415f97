#pragma once

#include <Eigen/Core>

namespace cooptrack::image {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;

// Nominal camera frame interval [s] (50 fps).
inline constexpr double kFrameInterval = 1.0 / 50.0;

// Constant-velocity pixel track state [u, v, du/dt, dv/dt].
struct PixelState {
  Vector4 mean = Vector4::Zero();
  Matrix4 covariance = Matrix4::Zero();

  double u() const { return mean(0); }
  double v() const { return mean(1); }
};

struct PixelNoiseParams {
  double r_px = 2.0;               // detection std [px]
  double q_px = 200.0;             // white-acceleration intensity [px^2/s^3]
  double initial_speed_std = 100.0;  // newborn velocity std [px/s]

  void validate() const;
};

// Discretized white-acceleration process noise for one axis pair.
Matrix4 cv_process_noise(double dt, double q_px);

PixelState cv_predict(const PixelState& s, double dt, double q_px);

PixelState cv_update(const PixelState& s, const Eigen::Vector2d& detection, double r_px);

PixelState cv_newborn(const Eigen::Vector2d& detection, const PixelNoiseParams& params);

}  // namespace cooptrack::image
