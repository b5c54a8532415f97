#pragma once

#include <optional>

#include <Eigen/Core>

namespace cooptrack::ekf {

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Matrix52 = Eigen::Matrix<double, 5, 2>;

// Below this yaw rate [rad/s] the turn-rate divisions are replaced by their
// Taylor expansions.
inline constexpr double kYawRateEpsilon = 1e-6;

// Lower bound on the velocity standard deviation [m/s] entering R.
inline constexpr double kSigmaVFloor = 0.05;

// Wraps an angle to (-pi, pi].
double normalize_angle(double angle);

// State index layout shared by vectors and covariance matrices.
enum StateIndex : int { kX = 0, kY = 1, kYaw = 2, kYawRate = 3, kSpeed = 4 };

struct BikeState {
  double x = 0.0;          // east [m]
  double y = 0.0;          // north [m]
  double gamma = 0.0;      // yaw [rad]
  double gamma_dot = 0.0;  // yaw rate [rad/s]
  double v = 0.0;          // speed along heading [m/s]

  Vector5 to_vector() const { return {x, y, gamma, gamma_dot, v}; }
  static BikeState from_vector(const Vector5& s) { return {s(0), s(1), s(2), s(3), s(4)}; }
  bool is_finite() const;
};

struct StateEstimate {
  BikeState state;
  Matrix5 covariance = Matrix5::Zero();
};

struct ProcessNoiseParams {
  double sigma_w_gamma_dot = 1.5;  // yaw-rate offset [rad/s]
  double sigma_w_v_dot = 2.5;      // acceleration [m/s^2]
  double T = 0.020;                // filter step [s]

  void validate() const;
};

struct MeasurementNoiseParams {
  double sigma_x = 0.15;          // [m]
  double sigma_y = 0.15;          // [m]
  double sigma_gamma_dot = 0.3;   // [rad/s]
  // Scale the device rows of R by 1/T, i.e. (sigma/T)^2. Disable for ablation.
  bool r_divide_by_T = true;

  void validate() const;
};

enum class MeasurementKind { PositionAndDevice, DeviceOnly, PositionOnly };

// One measurement instant. Use the factories; they enforce that exactly the
// fields required by the kind are present.
struct Measurement {
  MeasurementKind kind = MeasurementKind::PositionOnly;
  std::optional<Eigen::Vector2d> position;
  std::optional<double> gamma_dot;
  std::optional<double> v;
  std::optional<double> sigma_v;
  double timestamp = 0.0;

  static Measurement position_only(double t, double x, double y);
  static Measurement device_only(double t, double gamma_dot, double v, double sigma_v);
  static Measurement position_and_device(double t, double x, double y, double gamma_dot,
                                         double v, double sigma_v);

  void validate() const;
};

// Deterministic transition f(s) over one step of length T.
BikeState predict_state(const BikeState& s, double T);

// Transition with process noise w = [w_yaw_rate, w_accel] held over the step.
BikeState noisy_transition(const BikeState& s, const Eigen::Vector2d& w, double T);

// df/ds at s.
Matrix5 jacobian_f(const BikeState& s, double T);

// dg/dw at w = 0.
Matrix52 noise_gain(const BikeState& s, double T);

// Gamma(s) diag(sigma_w^2) Gamma(s)^T.
Matrix5 process_noise_cov(const BikeState& s, const ProcessNoiseParams& p);

StateEstimate ekf_predict(const StateEstimate& e, const ProcessNoiseParams& p);

StateEstimate ekf_update(const StateEstimate& e, const Measurement& m,
                         const MeasurementNoiseParams& n, const ProcessNoiseParams& p);

// Rows of H for the given kind (4x5, 2x5 or 2x5).
Eigen::MatrixXd measurement_matrix(MeasurementKind kind);

// Diagonal R matching measurement_matrix(m.kind).
Eigen::MatrixXd measurement_noise(const Measurement& m, const MeasurementNoiseParams& n,
                                  double T);

// Measurement vector z matching measurement_matrix(m.kind).
Eigen::VectorXd measurement_vector(const Measurement& m);

// Estimate for a track born at a single position fix.
StateEstimate newborn_estimate(double x, double y, const MeasurementNoiseParams& n);

// Symmetrizes P in place and returns it.
Matrix5& symmetrize(Matrix5& P);

}  // namespace cooptrack::ekf
