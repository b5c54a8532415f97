#include "cooptrack/track_manager.hpp"

#include <cmath>

namespace cooptrack::tracking {

void ManagerConfig::validate() const {
  if (!(gate_distance > 0.0)) throw InvalidArgument("gate_distance must be positive");
  if (!(miss_ratio_max > 0.0 && miss_ratio_max < 1.0)) {
    throw InvalidArgument("miss_ratio_max must lie in (0, 1)");
  }
  if (!(update_timeout > 0.0)) throw InvalidArgument("update_timeout must be positive");
  if (min_valid_age < 1) throw InvalidArgument("min_valid_age must be at least 1");
}

PixelTrackModel::PixelTrackModel(image::PixelNoiseParams params) : params_(params) {
  params_.validate();
}

PixelTrackModel::Filter PixelTrackModel::spawn(const Detection& d, double /*t*/) const {
  return image::cv_newborn(d.position, params_);
}

void PixelTrackModel::predict(Filter& f, double dt) const {
  f = image::cv_predict(f, dt, params_.q_px);
}

void PixelTrackModel::update(Filter& f, const Eigen::Vector2d* position,
                             const assoc::DeviceMeasurement* device, double /*t*/) const {
  if (device) throw InvalidArgument("pixel tracks cannot take device measurements");
  if (position) f = image::cv_update(f, *position, params_.r_px);
}

BikeTrackModel::BikeTrackModel(BikeModelParams params) : params_(params) {
  params_.process.validate();
  params_.measurement.validate();
  if (!(params_.device_gate > 0.0)) throw InvalidArgument("device gate must be positive");
}

BikeTrackModel::Filter BikeTrackModel::spawn(const Detection& d, double t) const {
  BikeFilter f;
  f.estimate = ekf::newborn_estimate(d.position(0), d.position(1), params_.measurement);
  f.position_fixes = 1;
  f.first_fix_time = t;
  f.first_fix = d.position;
  return f;
}

void BikeTrackModel::predict(Filter& f, double dt) const {
  const double T = params_.process.T;
  double remaining = dt;
  // Tolerance absorbs rounding in frame timestamps.
  const double tol = 1e-9;
  while (remaining > T - tol) {
    f.estimate = ekf::ekf_predict(f.estimate, params_.process);
    remaining -= T;
  }
  if (remaining > tol) {
    ekf::ProcessNoiseParams partial = params_.process;
    partial.T = remaining;
    f.estimate = ekf::ekf_predict(f.estimate, partial);
  }
}

void BikeTrackModel::update(Filter& f, const Eigen::Vector2d* position,
                            const assoc::DeviceMeasurement* device, double t) const {
  const auto& proc = params_.process;
  const auto& meas = params_.measurement;

  if (position) {
    ++f.position_fixes;
    const double dt = t - f.first_fix_time;
    if (f.position_fixes == 2 && dt > 0.0) {
      // Heading and speed become observable with the second fix.
      const Eigen::Vector2d d = *position - f.first_fix;
      f.estimate = ekf::newborn_estimate((*position)(0), (*position)(1), meas);
      f.estimate.state.gamma = std::atan2(d(1), d(0));
      f.estimate.state.v = d.norm() / dt;
      if (device) {
        f.estimate = ekf::ekf_update(
            f.estimate, ekf::Measurement::device_only(t, device->gamma_dot, device->v, device->sigma_v),
            meas, proc);
      }
      return;
    }
  }

  ekf::Measurement m;
  if (position && device) {
    m = ekf::Measurement::position_and_device(t, (*position)(0), (*position)(1), device->gamma_dot,
                                              device->v, device->sigma_v);
  } else if (position) {
    m = ekf::Measurement::position_only(t, (*position)(0), (*position)(1));
  } else if (device) {
    m = ekf::Measurement::device_only(t, device->gamma_dot, device->v, device->sigma_v);
  } else {
    return;
  }
  f.estimate = ekf::ekf_update(f.estimate, m, meas, proc);
}

std::optional<int> BikeTrackModel::bind_device(
    const assoc::DeviceMeasurement& m, std::span<const assoc::DeviceCandidate> candidates) const {
  return assoc::assign_device(m, candidates, params_.measurement, params_.process.T,
                              params_.device_gate);
}

template class TrackManager<PixelTrackModel>;
template class TrackManager<BikeTrackModel>;

}  // namespace cooptrack::tracking
