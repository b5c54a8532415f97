#include "cooptrack/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/error.hpp"
#include "cooptrack/velocity_estimator.hpp"

namespace cooptrack::sim {

namespace {

constexpr double kRk4Step = 0.001;
constexpr int kSubsteps = 20;  // kFramePeriod / kRk4Step

enum Stream : std::uint64_t {
  kDetectionNoise = 1,
  kDropout = 2,
  kDeviceNoise = 3,
  kGnssNoise = 4,
  kImuNoise = 5,
  kRider = 6,
  kJitter = 100,
};

double turn_duration(const ManeuverParams& m) {
  return std::numbers::pi * m.turn_radius / m.cruise_speed;
}

std::size_t frame_count(double duration) {
  return static_cast<std::size_t>(std::llround(duration / kFramePeriod)) + 1;
}

GroundTruthSample interpolate(std::span<const GroundTruthSample> gt, double t) {
  if (t <= gt.front().t) return gt.front();
  if (t >= gt.back().t) return gt.back();
  const auto k = static_cast<std::size_t>(std::floor((t - gt.front().t) / kFramePeriod));
  const std::size_t k1 = std::min(k + 1, gt.size() - 1);
  const double a = (t - gt[k].t) / kFramePeriod;
  GroundTruthSample s = gt[k];
  s.t = t;
  s.gamma_dot = (1.0 - a) * gt[k].gamma_dot + a * gt[k1].gamma_dot;
  s.v = (1.0 - a) * gt[k].v + a * gt[k1].v;
  s.x = (1.0 - a) * gt[k].x + a * gt[k1].x;
  s.y = (1.0 - a) * gt[k].y + a * gt[k1].y;
  return s;
}

}  // namespace

std::string to_string(SceneKind kind) {
  return kind == SceneKind::Starting ? "starting" : "turning_right";
}

SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "starting") return SceneKind::Starting;
  if (s == "turning_right") return SceneKind::TurningRight;
  throw InvalidArgument("unknown scene kind '" + s + "'");
}

void SceneSpec::validate() const {
  if (!(duration > 0.0)) throw InvalidArgument("scene duration must be positive");
  if (kind == SceneKind::TurningRight) {
    if (!(maneuver.cruise_speed > 0.0) || !(maneuver.turn_radius > 0.0)) {
      throw InvalidArgument("turning scenes need positive cruise speed and turn radius");
    }
  } else if (!(maneuver.v_peak >= 0.0) || !(maneuver.rise_time > 0.0)) {
    throw InvalidArgument("starting scenes need v_peak >= 0 and rise_time > 0");
  }
  for (const auto& w : occlusions) {
    if (!(w.duration > 0.0) || !(w.start_offset > 0.0) || w.start_offset > duration ||
        w.start_offset - w.duration < -1e-9) {
      throw InvalidArgument("occlusion window must lie inside the scene");
    }
  }
  if (noise.detection_miss_probability < 0.0 || noise.detection_miss_probability > 1.0) {
    throw InvalidArgument("detection miss probability must lie in [0, 1]");
  }
}

double profile_speed(const SceneSpec& spec, double t) {
  const auto& m = spec.maneuver;
  if (spec.kind == SceneKind::TurningRight) return m.cruise_speed;
  const double k = 2.0 * std::log(9.0) / m.rise_time;
  return m.v_peak / (1.0 + std::exp(-k * (t - m.ramp_center)));
}

double profile_yaw_rate(const SceneSpec& spec, double t) {
  if (spec.kind != SceneKind::TurningRight) return 0.0;
  const auto& m = spec.maneuver;
  const double D = turn_duration(m);
  const double s = t - m.turn_start;
  if (s < 0.0 || s > D) return 0.0;
  // Raised cosine with integral -pi/2.
  return -(std::numbers::pi / (2.0 * D)) * (1.0 - std::cos(2.0 * std::numbers::pi * s / D));
}

std::vector<GroundTruthSample> generate_ground_truth(const SceneSpec& spec) {
  spec.validate();
  const std::size_t n = frame_count(spec.duration);
  std::vector<GroundTruthSample> out;
  out.reserve(n);

  // Heading is integrated alongside position.
  Eigen::Vector3d state(spec.maneuver.x0, spec.maneuver.y0, spec.maneuver.heading0);
  const auto deriv = [&](double t, const Eigen::Vector3d& s) {
    const double v = profile_speed(spec, t);
    return Eigen::Vector3d(v * std::cos(s(2)), v * std::sin(s(2)), profile_yaw_rate(spec, t));
  };

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * kFramePeriod;
    out.push_back({t, state(0), state(1), ekf::normalize_angle(state(2)),
                   profile_yaw_rate(spec, t), profile_speed(spec, t)});
    if (k + 1 == n) break;
    for (int j = 0; j < kSubsteps; ++j) {
      const double ts = t + j * kRk4Step;
      const double h = kRk4Step;
      const Eigen::Vector3d k1 = deriv(ts, state);
      const Eigen::Vector3d k2 = deriv(ts + 0.5 * h, state + 0.5 * h * k1);
      const Eigen::Vector3d k3 = deriv(ts + 0.5 * h, state + 0.5 * h * k2);
      const Eigen::Vector3d k4 = deriv(ts + h, state + h * k3);
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

std::vector<bool> occlusion_mask(const SceneSpec& spec, std::size_t frames) {
  std::vector<bool> mask(frames, false);
  for (const auto& w : spec.occlusions) {
    const auto start = std::llround((spec.duration - w.start_offset) / kFramePeriod);
    const auto count = std::llround(w.duration / kFramePeriod);
    for (long long k = std::max(0LL, start); k < start + count; ++k) {
      if (static_cast<std::size_t>(k) < frames) mask[static_cast<std::size_t>(k)] = true;
    }
  }
  return mask;
}

RiderParams draw_rider(Rng& rng) {
  RiderParams r;
  r.gear_development = rng.uniform(4.0, 7.0);
  r.vibration_gain = rng.uniform(0.7, 1.3);
  r.bounce_gain = rng.uniform(0.6, 1.4);
  return r;
}

std::vector<ImuSample> simulate_imu(std::span<const GroundTruthSample> gt,
                                    const RiderParams& rider, Rng& rng) {
  std::vector<ImuSample> out;
  out.reserve(gt.size());
  double phase = 0.0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const auto& s = gt[k];
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = std::min(k + 1, gt.size() - 1);
    const double accel = hi > lo ? (gt[hi].v - gt[lo].v) / (gt[hi].t - gt[lo].t) : 0.0;
    const double cadence = s.v / rider.gear_development;  // crank revolutions per second
    phase += 2.0 * std::numbers::pi * cadence * kFramePeriod;

    const double lon = accel + rider.bounce_gain * 0.4 * cadence * std::sin(2.0 * phase) +
                       rng.normal(0.0, 0.1);
    const double lat = s.v * s.gamma_dot + rng.normal(0.0, 0.1);
    const double c = std::cos(s.gamma);
    const double sn = std::sin(s.gamma);

    ImuSample imu;
    imu.t = s.t;
    imu.acc.x() = c * lon - sn * lat;
    imu.acc.y() = sn * lon + c * lat;
    imu.acc.z() = rider.bounce_gain * 0.6 * cadence * std::sin(2.0 * phase + 0.5) +
                  rider.vibration_gain * 0.08 * s.v * rng.normal() + rng.normal(0.0, 0.05);
    const double roll = 0.25 * cadence * std::sin(phase) + rng.normal(0.0, 0.02);
    const double pitch = 0.15 * cadence * std::cos(2.0 * phase) + rng.normal(0.0, 0.02);
    imu.gyr.x() = c * roll - sn * pitch;
    imu.gyr.y() = sn * roll + c * pitch;
    imu.gyr.z() = s.gamma_dot + 0.1 * std::min(1.0, s.v / 3.0) * std::sin(2.0 * phase) +
                  rng.normal(0.0, 0.02);
    out.push_back(imu);
  }
  return out;
}

std::vector<GnssSample> simulate_gnss(std::span<const GroundTruthSample> gt,
                                      const SensorNoiseParams& noise, Rng& rng) {
  std::vector<GnssSample> out;
  const auto step = static_cast<std::size_t>(std::llround(kGnssPeriod / kFramePeriod));
  for (std::size_t k = 0; k < gt.size(); k += step) {
    const auto& s = gt[k];
    GnssSample g;
    g.t = s.t;
    g.v = std::max(0.0, s.v + rng.normal(0.0, noise.sigma_gnss_v));
    g.x = s.x + rng.normal(0.0, noise.sigma_gnss_position);
    g.y = s.y + rng.normal(0.0, noise.sigma_gnss_position);
    out.push_back(g);
  }
  return out;
}

Scene simulate_sensors(std::span<const GroundTruthSample> trajectory, const SceneSpec& spec,
                       const velocity::VelocityModels* models) {
  spec.validate();
  if (trajectory.empty()) throw InvalidArgument("simulate_sensors: empty trajectory");
  Scene scene;
  scene.spec = spec;
  scene.ground_truth.assign(trajectory.begin(), trajectory.end());
  scene.occlusion_mask = occlusion_mask(spec, trajectory.size());

  // Noise for every frame is drawn whether or not the frame is dropped, so
  // scenes differing only in occlusions share all other samples.
  Rng det_rng(spec.seed, kDetectionNoise);
  Rng drop_rng(spec.seed, kDropout);
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const double nx = det_rng.normal(0.0, spec.noise.sigma_detection);
    const double ny = det_rng.normal(0.0, spec.noise.sigma_detection);
    const double u = drop_rng.uniform();
    if (scene.occlusion_mask[k] || u < spec.noise.detection_miss_probability) continue;
    scene.detections.push_back({trajectory[k].t, trajectory[k].x + nx, trajectory[k].y + ny});
  }

  Rng gnss_rng(spec.seed, kGnssNoise);
  scene.gnss = simulate_gnss(trajectory, spec.noise, gnss_rng);

  if (spec.device_source == DeviceSource::GroundTruth) {
    Rng dev_rng(spec.seed, kDeviceNoise);
    for (const auto& s : trajectory) {
      const GroundTruthSample lagged = interpolate(trajectory, s.t - spec.noise.device_delay);
      DeviceSample d;
      d.t = s.t;
      d.gamma_dot = lagged.gamma_dot + dev_rng.normal(0.0, spec.noise.sigma_device_gamma_dot);
      d.v = lagged.v + dev_rng.normal(0.0, spec.noise.sigma_device_v);
      d.sigma_v = spec.noise.sigma_device_v;
      scene.device.push_back(d);
    }
  } else {
    if (models == nullptr) {
      throw InvalidArgument("estimator device source requires trained velocity models");
    }
    Rng rider_rng(spec.seed, kRider);
    Rng imu_rng(spec.seed, kImuNoise);
    const RiderParams rider = draw_rider(rider_rng);
    const auto imu = simulate_imu(trajectory, rider, imu_rng);
    scene.device = velocity::device_stream(imu, scene.gnss, *models);
  }
  return scene;
}

Scene generate_scene(const SceneSpec& spec, const velocity::VelocityModels* models) {
  const auto gt = generate_ground_truth(spec);
  return simulate_sensors(gt, spec, models);
}

std::string batch_scene_id(SceneKind kind, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", kind == SceneKind::Starting ? "starting" : "turning",
                index);
  return buf;
}

SceneSpec batch_scene_spec(const SceneBatchSpec& batch, SceneKind kind, int index) {
  const std::uint64_t stream =
      (static_cast<std::uint64_t>(kind == SceneKind::Starting ? 1 : 2) << 32) |
      static_cast<std::uint32_t>(index);
  Rng seeder(batch.seed, stream);

  SceneSpec spec;
  spec.kind = kind;
  spec.seed = seeder.next();
  spec.duration = kind == SceneKind::Starting ? batch.starting_duration : batch.turning_duration;
  spec.noise = batch.noise;
  spec.occlusions = batch.occlusions;
  spec.device_source = batch.device_source;

  auto& m = spec.maneuver;
  if (batch.jitter) {
    Rng j(spec.seed, kJitter);
    m.x0 = j.uniform(-10.0, 10.0);
    m.y0 = j.uniform(-10.0, 10.0);
    m.heading0 = j.uniform(-std::numbers::pi, std::numbers::pi);
    if (kind == SceneKind::Starting) {
      m.v_peak = j.uniform(3.5, 6.5);
      m.rise_time = j.uniform(2.0, 4.0);
      m.ramp_center = j.uniform(6.5, 8.5);
    } else {
      m.cruise_speed = j.uniform(3.5, 5.5);
      m.turn_radius = j.uniform(5.0, 8.0);
      m.turn_start = j.uniform(5.0, 6.5);
    }
  }
  if (kind == SceneKind::TurningRight) {
    // The turn must finish inside the scene.
    m.turn_start = std::max(0.0, std::min(m.turn_start, spec.duration - 0.5 - turn_duration(m)));
  }
  return spec;
}

Json to_json(const SceneSpec& spec) {
  Json occ = Json::array();
  for (const auto& w : spec.occlusions) {
    occ.push_back({{"start_offset", w.start_offset}, {"duration", w.duration}});
  }
  const auto& m = spec.maneuver;
  const auto& n = spec.noise;
  return {{"kind", to_string(spec.kind)},
          {"duration", spec.duration},
          {"seed", spec.seed},
          {"device_source", spec.device_source == DeviceSource::GroundTruth ? "ground_truth" : "estimator"},
          {"maneuver",
           {{"v_peak", m.v_peak},
            {"rise_time", m.rise_time},
            {"ramp_center", m.ramp_center},
            {"cruise_speed", m.cruise_speed},
            {"turn_radius", m.turn_radius},
            {"turn_start", m.turn_start},
            {"x0", m.x0},
            {"y0", m.y0},
            {"heading0", m.heading0}}},
          {"noise",
           {{"sigma_detection", n.sigma_detection},
            {"sigma_device_gamma_dot", n.sigma_device_gamma_dot},
            {"sigma_device_v", n.sigma_device_v},
            {"device_delay", n.device_delay},
            {"sigma_gnss_v", n.sigma_gnss_v},
            {"sigma_gnss_position", n.sigma_gnss_position},
            {"detection_miss_probability", n.detection_miss_probability}}},
          {"occlusions", occ}};
}

SceneSpec spec_from_json(const Json& j) {
  try {
    SceneSpec spec;
    spec.kind = scene_kind_from_string(j.at("kind").get<std::string>());
    spec.duration = j.at("duration").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    const auto src = j.value("device_source", std::string("ground_truth"));
    if (src == "ground_truth") {
      spec.device_source = DeviceSource::GroundTruth;
    } else if (src == "estimator") {
      spec.device_source = DeviceSource::Estimator;
    } else {
      throw DataError("unknown device_source '" + src + "'");
    }
    const auto& m = j.at("maneuver");
    auto& sm = spec.maneuver;
    sm.v_peak = m.at("v_peak");
    sm.rise_time = m.at("rise_time");
    sm.ramp_center = m.at("ramp_center");
    sm.cruise_speed = m.at("cruise_speed");
    sm.turn_radius = m.at("turn_radius");
    sm.turn_start = m.at("turn_start");
    sm.x0 = m.at("x0");
    sm.y0 = m.at("y0");
    sm.heading0 = m.at("heading0");
    const auto& n = j.at("noise");
    auto& sn = spec.noise;
    sn.sigma_detection = n.at("sigma_detection");
    sn.sigma_device_gamma_dot = n.at("sigma_device_gamma_dot");
    sn.sigma_device_v = n.at("sigma_device_v");
    sn.device_delay = n.at("device_delay");
    sn.sigma_gnss_v = n.at("sigma_gnss_v");
    sn.sigma_gnss_position = n.at("sigma_gnss_position");
    sn.detection_miss_probability = n.at("detection_miss_probability");
    for (const auto& w : j.at("occlusions")) {
      spec.occlusions.push_back({w.at("start_offset").get<double>(), w.at("duration").get<double>()});
    }
    return spec;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed scene spec: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
}

}  // namespace cooptrack::sim
