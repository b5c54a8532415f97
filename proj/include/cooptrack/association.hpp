#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cooptrack/ekf_bike.hpp"

namespace cooptrack::assoc {

// Track-by-detection cost table. Rows are tracks, columns detections. Pairs
// marked forbidden (gated out) never appear in a solution.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double cost(std::size_t r, std::size_t c) const { return cost_[index(r, c)]; }
  void set_cost(std::size_t r, std::size_t c, double value) { cost_[index(r, c)] = value; }

  bool forbidden(std::size_t r, std::size_t c) const { return forbidden_[index(r, c)] != 0; }
  void forbid(std::size_t r, std::size_t c) { forbidden_[index(r, c)] = 1; }

 private:
  std::size_t index(std::size_t r, std::size_t c) const { return r * cols_ + c; }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cost_;
  std::vector<std::uint8_t> forbidden_;
};

struct Assignment {
  std::size_t row;
  std::size_t col;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Minimum-cost matching over the allowed pairs. Among all matchings with the
// largest number of allowed pairs, the cheapest one is returned, sorted by row.
std::vector<Assignment> munkres_solve(const CostMatrix& c);

double total_cost(const CostMatrix& c, std::span<const Assignment> assignment);

struct DeviceResidual {
  Eigen::Vector2d y = Eigen::Vector2d::Zero();    // [yaw rate, speed] residual
  Eigen::Matrix2d S = Eigen::Matrix2d::Identity();  // innovation covariance
};

// sqrt(y' S^-1 y + ln det S), radicand clamped at zero. Throws on non-PD S.
double penalized_mahalanobis(const DeviceResidual& r);

struct DeviceMeasurement {
  double gamma_dot = 0.0;  // [rad/s]
  double v = 0.0;          // [m/s]
  double sigma_v = 0.0;    // [m/s]
};

// Residual of a device reading against a predicted track, using the
// device-only H and R.
DeviceResidual device_residual(const DeviceMeasurement& m, const ekf::StateEstimate& track,
                               const ekf::MeasurementNoiseParams& n, double T);

struct DeviceCandidate {
  int id = 0;
  ekf::StateEstimate estimate;
};

inline constexpr double kDefaultDeviceGate = 5.0;

// Nearest neighbour under the penalized Mahalanobis distance. Returns the id of
// the closest candidate when its distance is within the gate; ties go to the
// lowest id.
std::optional<int> assign_device(const DeviceMeasurement& m,
                                 std::span<const DeviceCandidate> tracks,
                                 const ekf::MeasurementNoiseParams& n, double T,
                                 double gate = kDefaultDeviceGate);

// Same rule over a plain list; the returned value is the list index.
std::optional<std::size_t> assign_device(const DeviceMeasurement& m,
                                         std::span<const ekf::StateEstimate> tracks,
                                         const ekf::MeasurementNoiseParams& n, double T,
                                         double gate = kDefaultDeviceGate);

}  // namespace cooptrack::assoc
