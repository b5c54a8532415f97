#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cooptrack/sensors.hpp"

namespace cooptrack::features {

inline constexpr double kImuPeriod = 0.02;        // 50 Hz
inline constexpr double kYawRateWindow = 0.25;    // [s]
inline constexpr std::size_t kDftWindow = 256;    // 5.12 s at 50 Hz
inline constexpr std::size_t kDftOrders = 6;      // coefficients 0..5

struct TimedValue {
  double t = 0.0;
  double value = 0.0;
};

// Centered moving average with `taps` samples (odd); edge windows are
// truncated to the available samples.
std::vector<double> centered_moving_average(std::span<const double> signal, std::size_t taps);

// Number of taps spanning `window` seconds at the IMU rate (13 for 0.25 s).
std::size_t taps_for_window(double window, double period = kImuPeriod);

// Yaw rate as the low-passed tangent-frame gyroscope z axis.
std::vector<TimedValue> yaw_rate(std::span<const ImuSample> imu);

struct WindowStats {
  double mean = 0.0;
  double energy = 0.0;  // mean of squares
};

WindowStats window_features(std::span<const double> window);

// |DFT_k| for k = 0..5 divided by the window energy (sum of squares). The
// window must hold exactly kDftWindow samples.
std::array<double, kDftOrders> dft_features(std::span<const double> window);

// Discrete orthonormal polynomial basis over n uniformly indexed samples.
class OrthoPolyBasis {
 public:
  OrthoPolyBasis(std::size_t n, std::size_t degree);

  std::size_t size() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t degree() const { return static_cast<std::size_t>(basis_.cols()) - 1; }

  // n x (degree + 1), orthonormal columns.
  const Eigen::MatrixXd& basis() const { return basis_; }

  Eigen::VectorXd coefficients(std::span<const double> window) const;
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& coefficients) const;

 private:
  Eigen::MatrixXd basis_;
};

// Least-squares coefficients in the orthonormal basis of the given degree.
Eigen::VectorXd orthopoly_coeffs(std::span<const double> window, std::size_t degree);

}  // namespace cooptrack::features
