#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/image_track.hpp"
#include "cooptrack/json.hpp"
#include "cooptrack/metrics.hpp"
#include "cooptrack/regression_forest.hpp"
#include "cooptrack/scene_sim.hpp"
#include "cooptrack/track_manager.hpp"
#include "cooptrack/velocity_estimator.hpp"

namespace cooptrack::config {

struct FilterConfig {
  ekf::ProcessNoiseParams process;
  ekf::MeasurementNoiseParams measurement;
  double device_gate = assoc::kDefaultDeviceGate;
};

// Occlusion conditions evaluated by `compare`. A duration of 0 means no
// occlusion; all windows open at the same offset before the scene end.
struct CompareConfig {
  std::vector<double> occlusion_durations = {0.0, 1.0, 2.0};
  double occlusion_start_offset = 5.0;
};

struct VelocityConfig {
  velocity::TrainingSetSpec training;
  forest::ForestParams forest;
  std::string model_dir;  // trained models for the estimator device source
};

struct RunConfig {
  FilterConfig filter;
  image::PixelNoiseParams pixel_filter;
  tracking::ManagerConfig pixel_manager = tracking::ManagerConfig::pixel_defaults();
  tracking::ManagerConfig coop_manager = tracking::ManagerConfig::coop_defaults();
  metrics::MetricConfig metrics;
  sim::SceneBatchSpec scenes;
  CompareConfig compare;
  VelocityConfig velocity;
  std::vector<std::string> models = {"P", "C"};
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int jobs = 1;

  // Pushes `seed` into the scene batch and training specs.
  void apply_seed();
  void validate() const;
};

// Unknown keys anywhere raise ConfigError; absent keys keep their defaults.
RunConfig from_json(const Json& j);
Json to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

// Defaults, or the given file, with the COOPTRACK_SEED override applied.
RunConfig resolve_config(const std::optional<std::filesystem::path>& path);

// FNV-1a of the canonical JSON form, leaving out output_dir and jobs since
// neither changes results.
std::string config_hash(const RunConfig& c);

}  // namespace cooptrack::config
