#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cooptrack/association.hpp"
#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/error.hpp"
#include "cooptrack/image_track.hpp"

namespace cooptrack::tracking {

enum class ManagerMode { Pixel2D, Coop3D };
enum class TrackStatus { Tentative, Valid, Lost };

struct ManagerConfig {
  double gate_distance = 2.0;   // [px] or [m]
  double miss_ratio_max = 0.5;  // miss_count / age above which a track is lost
  double update_timeout = 2.0;  // [s] without a position update
  int min_valid_age = 4;        // [frames]
  ManagerMode mode = ManagerMode::Coop3D;

  // Image-space stage: 40 px, 30 %, 1 s, 4 frames.
  static ManagerConfig pixel_defaults() { return {40.0, 0.30, 1.0, 4, ManagerMode::Pixel2D}; }
  // Cooperative 3D stage: 2 m, 50 %, 2 s, 4 frames.
  static ManagerConfig coop_defaults() { return {2.0, 0.50, 2.0, 4, ManagerMode::Coop3D}; }

  void validate() const;
};

struct Detection {
  std::int64_t id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

template <typename Filter>
struct Track {
  int id = 0;
  Filter filter;
  double filter_time = 0.0;  // time the filter was last propagated to
  int age = 0;               // frames since birth, birth frame counts as 1
  int miss_count = 0;
  double last_position_update = 0.0;
  TrackStatus status = TrackStatus::Tentative;
};

struct AssignmentLogEntry {
  double t = 0.0;
  int track_id = 0;
  std::optional<std::int64_t> detection_id;
  bool device_bound = false;
};

struct StepResult {
  std::vector<AssignmentLogEntry> log;
  std::vector<int> removed;  // ids of tracks declared lost this step
};

// Pixel-space constant-velocity filter policy.
class PixelTrackModel {
 public:
  using Filter = image::PixelState;
  static constexpr ManagerMode kMode = ManagerMode::Pixel2D;
  static constexpr bool kSupportsDevice = false;

  explicit PixelTrackModel(image::PixelNoiseParams params = {});

  Filter spawn(const Detection& d, double t) const;
  void predict(Filter& f, double dt) const;
  void update(Filter& f, const Eigen::Vector2d* position, const assoc::DeviceMeasurement* device,
              double t) const;
  Eigen::Vector2d position(const Filter& f) const { return f.mean.head<2>(); }

  const image::PixelNoiseParams& params() const { return params_; }

 private:
  image::PixelNoiseParams params_;
};

struct BikeFilter {
  ekf::StateEstimate estimate;
  int position_fixes = 0;
  double first_fix_time = 0.0;
  Eigen::Vector2d first_fix = Eigen::Vector2d::Zero();
};

struct BikeModelParams {
  ekf::ProcessNoiseParams process;
  ekf::MeasurementNoiseParams measurement;
  double device_gate = assoc::kDefaultDeviceGate;
};

// Cooperative bike-model EKF policy. Propagation always advances in steps of
// the filter period T, with one shorter step for any remainder.
class BikeTrackModel {
 public:
  using Filter = BikeFilter;
  static constexpr ManagerMode kMode = ManagerMode::Coop3D;
  static constexpr bool kSupportsDevice = true;

  explicit BikeTrackModel(BikeModelParams params = {});

  Filter spawn(const Detection& d, double t) const;
  void predict(Filter& f, double dt) const;
  void update(Filter& f, const Eigen::Vector2d* position, const assoc::DeviceMeasurement* device,
              double t) const;
  Eigen::Vector2d position(const Filter& f) const {
    return {f.estimate.state.x, f.estimate.state.y};
  }
  std::optional<int> bind_device(const assoc::DeviceMeasurement& m,
                                 std::span<const assoc::DeviceCandidate> candidates) const;

  const BikeModelParams& params() const { return params_; }

 private:
  BikeModelParams params_;
};

// Track lifecycle with memory: predict, gate, assign, update, spawn, prune,
// promote. One instance per scene; not thread-safe.
template <typename Model>
class TrackManager {
 public:
  using Filter = typename Model::Filter;
  using TrackType = Track<Filter>;

  TrackManager(ManagerConfig config, Model model) : config_(config), model_(std::move(model)) {
    config_.validate();
    if (config_.mode != Model::kMode) {
      throw InvalidArgument("manager mode does not match the filter model");
    }
  }

  StepResult step(std::span<const Detection> detections,
                  const std::optional<assoc::DeviceMeasurement>& device, double t_now);

  // Prediction-only propagation to t_now.
  void coast(TrackType& track, double t_now) const {
    if (t_now > track.filter_time) {
      model_.predict(track.filter, t_now - track.filter_time);
      track.filter_time = t_now;
    }
  }

  const std::vector<TrackType>& tracks() const { return tracks_; }
  const ManagerConfig& config() const { return config_; }
  const Model& model() const { return model_; }

 private:
  bool is_lost(const TrackType& t, double t_now) const {
    const double ratio = static_cast<double>(t.miss_count) / static_cast<double>(t.age);
    return ratio > config_.miss_ratio_max ||
           (t_now - t.last_position_update) > config_.update_timeout;
  }

  ManagerConfig config_;
  Model model_;
  std::vector<TrackType> tracks_;
  std::optional<double> last_time_;
  int next_id_ = 0;
};

template <typename Model>
StepResult TrackManager<Model>::step(std::span<const Detection> detections,
                                     const std::optional<assoc::DeviceMeasurement>& device,
                                     double t_now) {
  if (last_time_ && !(t_now > *last_time_)) {
    throw InvalidArgument("TrackManager::step: timestamps must increase");
  }
  last_time_ = t_now;

  for (auto& track : tracks_) {
    coast(track, t_now);
    ++track.age;
  }

  // Device binding is decided on the predicted states of valid tracks.
  std::optional<int> device_track;
  if (device) {
    if constexpr (Model::kSupportsDevice) {
      std::vector<assoc::DeviceCandidate> candidates;
      for (const auto& track : tracks_) {
        if (track.status == TrackStatus::Valid) {
          candidates.push_back({track.id, track.filter.estimate});
        }
      }
      device_track = model_.bind_device(*device, candidates);
    } else {
      throw InvalidArgument("device measurements require the cooperative filter model");
    }
  }

  assoc::CostMatrix costs(tracks_.size(), detections.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    const Eigen::Vector2d p = model_.position(tracks_[i].filter);
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const double d = (p - detections[j].position).norm();
      costs.set_cost(i, j, d);
      if (!(d <= config_.gate_distance)) costs.forbid(i, j);
    }
  }
  const auto matches = assoc::munkres_solve(costs);

  std::vector<std::optional<std::size_t>> match_of_track(tracks_.size());
  std::vector<bool> detection_used(detections.size(), false);
  for (const auto& m : matches) {
    match_of_track[m.row] = m.col;
    detection_used[m.col] = true;
  }

  StepResult result;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& track = tracks_[i];
    const Eigen::Vector2d* pos = nullptr;
    if (match_of_track[i]) pos = &detections[*match_of_track[i]].position;
    const bool bound = device_track && *device_track == track.id;
    const assoc::DeviceMeasurement* dev = bound ? &*device : nullptr;
    if (pos || dev) model_.update(track.filter, pos, dev, t_now);
    if (pos) {
      track.last_position_update = t_now;
    } else {
      ++track.miss_count;
    }
    AssignmentLogEntry entry{t_now, track.id, std::nullopt, bound};
    if (match_of_track[i]) entry.detection_id = detections[*match_of_track[i]].id;
    result.log.push_back(entry);
  }

  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (detection_used[j]) continue;
    TrackType track;
    track.id = next_id_++;
    track.filter = model_.spawn(detections[j], t_now);
    track.filter_time = t_now;
    track.age = 1;
    track.miss_count = 0;
    track.last_position_update = t_now;
    track.status = TrackStatus::Tentative;
    result.log.push_back({t_now, track.id, detections[j].id, false});
    tracks_.push_back(std::move(track));
  }

  for (auto& track : tracks_) {
    if (is_lost(track, t_now)) {
      track.status = TrackStatus::Lost;
      result.removed.push_back(track.id);
    }
  }
  std::erase_if(tracks_, [](const TrackType& t) { return t.status == TrackStatus::Lost; });

  for (auto& track : tracks_) {
    if (track.status == TrackStatus::Tentative && track.age >= config_.min_valid_age) {
      track.status = TrackStatus::Valid;
    }
  }
  return result;
}

extern template class TrackManager<PixelTrackModel>;
extern template class TrackManager<BikeTrackModel>;

using PixelTrackManager = TrackManager<PixelTrackModel>;
using BikeTrackManager = TrackManager<BikeTrackModel>;

}  // namespace cooptrack::tracking
