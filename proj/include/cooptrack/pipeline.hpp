#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cooptrack/config.hpp"
#include "cooptrack/metrics.hpp"
#include "cooptrack/scene_sim.hpp"
#include "cooptrack/track_manager.hpp"

namespace cooptrack::pipeline {

// P: position-only tracking. C: positions fused with smart-device data.
enum class Model { P, C };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

struct TrackerSettings {
  tracking::BikeModelParams filter;
  tracking::ManagerConfig manager = tracking::ManagerConfig::coop_defaults();

  static TrackerSettings from_config(const config::RunConfig& c);
};

struct TrackRow {
  double t = 0.0;
  int track_id = 0;
  double x = 0.0;
  double y = 0.0;
  double gamma = 0.0;
  double gamma_dot = 0.0;
  double v = 0.0;
  bool valid = false;
};

struct TrackRun {
  std::vector<TrackRow> rows;
  std::vector<tracking::AssignmentLogEntry> log;
};

// One manager step per ground-truth frame. Detections and device samples
// within half a frame of the step time are delivered with it; model P never
// looks at the device stream. Detection ids are indices into scene.detections.
TrackRun run_tracker(const sim::Scene& scene, Model model, const TrackerSettings& settings);

std::string tracks_csv(const TrackRun& run, const std::string& comment);
std::string assignments_csv(const TrackRun& run, const std::string& comment);
std::vector<TrackRow> read_tracks_csv(const std::filesystem::path& path);

metrics::MetricReport evaluate(const sim::Scene& scene, std::span<const TrackRow> rows,
                               const std::string& model_id, const metrics::MetricConfig& cfg);

// Metrics of one scene under one occlusion condition, one report per model.
struct SceneEvaluation {
  std::string scene_id;
  sim::SceneKind kind = sim::SceneKind::Starting;
  std::string condition;
  std::vector<metrics::MetricReport> reports;
};

struct BatchTables {
  std::string per_scene_csv;
  std::string summary_csv;  // min/max/mean per kind, condition and model
  std::string motap_csv;    // MOTAP sums per kind and condition (needs models P and C)
};

BatchTables aggregate(std::span<const SceneEvaluation> evals, const metrics::MetricConfig& cfg,
                      const std::string& comment);

std::string condition_label(double occlusion_duration);

// simulate -> track(P) -> track(C) -> evaluate over the configured batch and
// every occlusion condition. Scenes of all conditions share their noise.
// Output is independent of `jobs`.
std::vector<SceneEvaluation> run_compare(const config::RunConfig& cfg,
                                         const velocity::VelocityModels* models, int jobs);

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the exception of the
// lowest failing index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// "config=<hash> seed=<seed>"
std::string provenance_comment(const config::RunConfig& cfg);

}  // namespace cooptrack::pipeline
