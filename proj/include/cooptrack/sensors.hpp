#pragma once

#include <Eigen/Core>

namespace cooptrack {

// Smart-device inertial sample, already rotated into the local tangent frame
// (z up).
struct ImuSample {
  double t = 0.0;                                   // [s]
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();    // [m/s^2]
  Eigen::Vector3d gyr = Eigen::Vector3d::Zero();    // [rad/s]
};

struct GnssSample {
  double t = 0.0;  // [s]
  double v = 0.0;  // speed over ground [m/s]
  double x = 0.0;  // [m]
  double y = 0.0;  // [m]
};

// Smoothed yaw rate / regressed speed reading sent by the device.
struct DeviceSample {
  double t = 0.0;
  double gamma_dot = 0.0;  // [rad/s]
  double v = 0.0;          // [m/s]
  double sigma_v = 0.0;    // [m/s]
};

}  // namespace cooptrack
