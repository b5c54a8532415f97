#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cooptrack/json.hpp"
#include "cooptrack/random.hpp"
#include "cooptrack/sensors.hpp"

namespace cooptrack::velocity {
struct VelocityModels;
}

namespace cooptrack::sim {

inline constexpr double kFramePeriod = 0.02;  // 50 Hz camera and device grid
inline constexpr double kGnssPeriod = 1.0;    // 1 Hz fixes

enum class SceneKind { Starting, TurningRight };
enum class DeviceSource { GroundTruth, Estimator };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& s);

// Camera blackout. The window opens `start_offset` seconds before the last
// frame and lasts `duration` seconds. Windows sharing a start offset open on
// the same frame.
struct OcclusionWindow {
  double start_offset = 5.0;
  double duration = 2.0;
  friend bool operator==(const OcclusionWindow&, const OcclusionWindow&) = default;
};

struct ManeuverParams {
  // Starting: logistic speed ramp from rest.
  double v_peak = 5.0;       // [m/s]
  double rise_time = 3.0;    // 10-90 % rise [s]
  double ramp_center = 7.5;  // time of half speed [s]
  // TurningRight: constant speed with a raised-cosine yaw-rate pulse turning
  // by -pi/2. The pulse peak equals cruise_speed / turn_radius.
  double cruise_speed = 4.0;  // [m/s]
  double turn_radius = 6.0;   // [m]
  double turn_start = 6.0;    // [s]
  // Initial pose.
  double x0 = 0.0;
  double y0 = 0.0;
  double heading0 = 0.0;
  friend bool operator==(const ManeuverParams&, const ManeuverParams&) = default;
};

struct SensorNoiseParams {
  double sigma_detection = 0.15;        // [m]
  double sigma_device_gamma_dot = 0.3;  // [rad/s]
  double sigma_device_v = 0.3;          // [m/s]
  double device_delay = 0.3;            // [s]
  double sigma_gnss_v = 0.3;            // [m/s]
  double sigma_gnss_position = 3.0;     // [m]
  double detection_miss_probability = 0.02;  // per-frame natural dropout
  friend bool operator==(const SensorNoiseParams&, const SensorNoiseParams&) = default;
};

struct SceneSpec {
  SceneKind kind = SceneKind::TurningRight;
  double duration = 12.0;  // [s]
  ManeuverParams maneuver;
  SensorNoiseParams noise;
  std::vector<OcclusionWindow> occlusions;
  DeviceSource device_source = DeviceSource::GroundTruth;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

Json to_json(const SceneSpec& spec);
SceneSpec spec_from_json(const Json& j);

struct GroundTruthSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double gamma = 0.0;
  double gamma_dot = 0.0;
  double v = 0.0;
};

struct DetectionSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Scene {
  std::string id;
  SceneSpec spec;
  std::vector<GroundTruthSample> ground_truth;  // 50 Hz, gap-free
  std::vector<DetectionSample> detections;      // 50 Hz with gaps
  std::vector<DeviceSample> device;             // 50 Hz
  std::vector<GnssSample> gnss;                 // 1 Hz
  std::vector<bool> occlusion_mask;             // per ground-truth frame
};

// Speed and yaw-rate profiles of the maneuver.
double profile_speed(const SceneSpec& spec, double t);
double profile_yaw_rate(const SceneSpec& spec, double t);

// RK4 at 1 ms, decimated to the 50 Hz frame grid [0, duration].
std::vector<GroundTruthSample> generate_ground_truth(const SceneSpec& spec);

// Per-frame occlusion flags for `frame_count` frames spaced kFramePeriod.
std::vector<bool> occlusion_mask(const SceneSpec& spec, std::size_t frame_count);

// Detections, device and GNSS streams. With DeviceSource::Estimator the device
// stream comes from synthetic IMU data run through the velocity estimator, and
// `models` must be non-null.
Scene simulate_sensors(std::span<const GroundTruthSample> trajectory, const SceneSpec& spec,
                       const velocity::VelocityModels* models = nullptr);

Scene generate_scene(const SceneSpec& spec, const velocity::VelocityModels* models = nullptr);

// Rider-specific constants shaping the synthetic IMU signals.
struct RiderParams {
  double gear_development = 5.5;  // [m] travelled per crank revolution
  double vibration_gain = 1.0;    // road vibration scale
  double bounce_gain = 1.0;       // pedaling bounce scale
};

RiderParams draw_rider(Rng& rng);

// Tangent-frame IMU at 50 Hz: pedaling-modulated accelerations, centripetal
// and longitudinal acceleration, speed-dependent road vibration, gyroscope
// wobble around the true yaw rate.
std::vector<ImuSample> simulate_imu(std::span<const GroundTruthSample> trajectory,
                                    const RiderParams& rider, Rng& rng);

std::vector<GnssSample> simulate_gnss(std::span<const GroundTruthSample> trajectory,
                                      const SensorNoiseParams& noise, Rng& rng);

// Scenes for a batch are drawn around the defaults with per-scene jitter.
struct SceneBatchSpec {
  int n_starting = 87;
  int n_turning = 74;
  double starting_duration = 12.0;
  double turning_duration = 12.0;
  SensorNoiseParams noise;
  std::vector<OcclusionWindow> occlusions;
  DeviceSource device_source = DeviceSource::GroundTruth;
  bool jitter = true;
  std::uint64_t seed = 1;

  friend bool operator==(const SceneBatchSpec&, const SceneBatchSpec&) = default;
};

// Spec of scene `index` within its kind. Deterministic in (batch.seed, kind, index).
SceneSpec batch_scene_spec(const SceneBatchSpec& batch, SceneKind kind, int index);
std::string batch_scene_id(SceneKind kind, int index);

}  // namespace cooptrack::sim
