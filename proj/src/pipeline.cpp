#include "cooptrack/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <thread>

#include "cooptrack/csv.hpp"
#include "cooptrack/error.hpp"

namespace cooptrack::pipeline {

namespace {

constexpr double kHalfFrame = 0.5 * sim::kFramePeriod;

std::string metric_cell(double v) { return std::isfinite(v) ? io::format_fixed(v) : "nan"; }

}  // namespace

std::string to_string(Model m) { return m == Model::P ? "P" : "C"; }

Model model_from_string(const std::string& s) {
  if (s == "P") return Model::P;
  if (s == "C") return Model::C;
  throw ConfigError("unknown model '" + s + "' (expected P or C)");
}

TrackerSettings TrackerSettings::from_config(const config::RunConfig& c) {
  TrackerSettings s;
  s.filter.process = c.filter.process;
  s.filter.measurement = c.filter.measurement;
  s.filter.device_gate = c.filter.device_gate;
  s.manager = c.coop_manager;
  return s;
}

TrackRun run_tracker(const sim::Scene& scene, Model model, const TrackerSettings& settings) {
  tracking::BikeTrackManager manager(settings.manager, tracking::BikeTrackModel(settings.filter));
  TrackRun run;
  std::size_t di = 0;
  std::size_t vi = 0;
  std::vector<tracking::Detection> dets;
  for (const auto& frame : scene.ground_truth) {
    const double lo = frame.t - kHalfFrame;
    const double hi = frame.t + kHalfFrame;

    dets.clear();
    while (di < scene.detections.size() && scene.detections[di].t < lo) ++di;
    while (di < scene.detections.size() && scene.detections[di].t < hi) {
      const auto& d = scene.detections[di];
      dets.push_back({static_cast<std::int64_t>(di), Eigen::Vector2d(d.x, d.y)});
      ++di;
    }

    std::optional<assoc::DeviceMeasurement> device;
    if (model == Model::C) {
      while (vi < scene.device.size() && scene.device[vi].t < lo) ++vi;
      while (vi < scene.device.size() && scene.device[vi].t < hi) {
        const auto& s = scene.device[vi];
        device = assoc::DeviceMeasurement{s.gamma_dot, s.v, s.sigma_v};
        ++vi;
      }
    }

    auto result = manager.step(dets, device, frame.t);
    run.log.insert(run.log.end(), result.log.begin(), result.log.end());
    for (const auto& track : manager.tracks()) {
      const auto& st = track.filter.estimate.state;
      run.rows.push_back({frame.t, track.id, st.x, st.y, st.gamma, st.gamma_dot, st.v,
                          track.status == tracking::TrackStatus::Valid});
    }
  }
  return run;
}

std::string tracks_csv(const TrackRun& run, const std::string& comment) {
  io::CsvBuilder b({"t", "track_id", "x", "y", "gamma", "gamma_dot", "v", "valid"});
  if (!comment.empty()) b.comment(comment);
  for (const auto& r : run.rows) {
    b.row().cell(r.t).cell(r.track_id).cell(r.x).cell(r.y).cell(r.gamma).cell(r.gamma_dot).cell(r.v)
        .cell(r.valid ? 1 : 0);
  }
  return b.str();
}

std::string assignments_csv(const TrackRun& run, const std::string& comment) {
  io::CsvBuilder b({"t", "track_id", "detection_id", "device_bound"});
  if (!comment.empty()) b.comment(comment);
  for (const auto& e : run.log) {
    b.row().cell(e.t).cell(e.track_id);
    if (e.detection_id) {
      b.cell(static_cast<long long>(*e.detection_id));
    } else {
      b.cell(std::string_view("NONE"));
    }
    b.cell(e.device_bound ? 1 : 0);
  }
  return b.str();
}

std::vector<TrackRow> read_tracks_csv(const std::filesystem::path& path) {
  const auto table =
      io::read_numeric_csv(path, {"t", "track_id", "x", "y", "gamma", "gamma_dot", "v", "valid"});
  std::vector<TrackRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r[7] != 0.0 && r[7] != 1.0) {
      throw DataError(path.string() + ":" + std::to_string(table.line_numbers[i]) +
                      ": valid flag must be 0 or 1");
    }
    rows.push_back({r[0], static_cast<int>(r[1]), r[2], r[3], r[4], r[5], r[6], r[7] == 1.0});
  }
  return rows;
}

metrics::MetricReport evaluate(const sim::Scene& scene, std::span<const TrackRow> rows,
                               const std::string& model_id, const metrics::MetricConfig& cfg) {
  std::vector<metrics::TruthPoint> truth;
  truth.reserve(scene.ground_truth.size());
  for (const auto& g : scene.ground_truth) truth.push_back({g.t, g.x, g.y});
  if (!rows.empty()) {
    const double t_end = scene.ground_truth.back().t + kHalfFrame;
    const double t_begin = scene.ground_truth.front().t - kHalfFrame;
    if (rows.front().t < t_begin || rows.back().t > t_end) {
      throw DataError("tracks of scene '" + scene.id + "' lie outside the scene time span");
    }
  }
  std::vector<metrics::TrackPoint> points;
  points.reserve(rows.size());
  for (const auto& r : rows) points.push_back({r.t, r.track_id, r.x, r.y, r.valid});
  const auto records = metrics::build_records(truth, points, cfg, 1e-6);
  return metrics::make_report(scene.id, model_id, records, cfg);
}

std::string condition_label(double occlusion_duration) {
  if (occlusion_duration <= 0.0) return "none";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "occlusion_%gs", occlusion_duration);
  return buf;
}

BatchTables aggregate(std::span<const SceneEvaluation> evals, const metrics::MetricConfig& cfg,
                      const std::string& comment) {
  BatchTables out;
  io::CsvBuilder per({"scene_id", "kind", "condition", "model", "motp", "mota", "frames", "matches",
                      "dm", "lm"});
  if (!comment.empty()) per.comment(comment);

  // Groups keep first-appearance order so tables follow the batch order.
  struct Group {
    std::string kind;
    std::string condition;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_model;
    std::vector<std::string> model_order;
    int motap_pc = 0;
    int motap_cp = 0;
    int paired = 0;
    int scenes = 0;
  };
  std::vector<Group> groups;
  const auto group_for = [&](const std::string& kind, const std::string& cond) -> Group& {
    for (auto& g : groups) {
      if (g.kind == kind && g.condition == cond) return g;
    }
    groups.push_back({kind, cond, {}, {}, 0, 0, 0, 0});
    return groups.back();
  };

  for (const auto& e : evals) {
    const std::string kind = sim::to_string(e.kind);
    auto& g = group_for(kind, e.condition);
    ++g.scenes;
    const metrics::MetricReport* p = nullptr;
    const metrics::MetricReport* c = nullptr;
    for (const auto& r : e.reports) {
      const double motp = r.motp.value_or(std::nan(""));
      per.row()
          .cell(e.scene_id)
          .cell(kind)
          .cell(e.condition)
          .cell(r.model_id)
          .cell(metric_cell(motp))
          .cell(metric_cell(r.mota))
          .cell(r.counts.frames)
          .cell(r.counts.matches)
          .cell(r.counts.dm)
          .cell(r.counts.lm);
      if (!g.by_model.count(r.model_id)) g.model_order.push_back(r.model_id);
      auto& [motps, motas] = g.by_model[r.model_id];
      motps.push_back(motp);
      motas.push_back(r.mota);
      if (r.model_id == "P") p = &r;
      if (r.model_id == "C") c = &r;
    }
    if (p && c) {
      const auto pair = metrics::compare_reports(*p, *c, cfg);
      g.motap_pc += pair.motap_ab;
      g.motap_cp += pair.motap_ba;
      ++g.paired;
    }
  }
  out.per_scene_csv = per.str();

  io::CsvBuilder sum({"kind", "condition", "model", "n", "motp_min", "motp_max", "motp_mean",
                      "mota_min", "mota_max", "mota_mean"});
  if (!comment.empty()) sum.comment(comment);
  io::CsvBuilder motap({"kind", "condition", "n", "motap_P_C", "motap_C_P"});
  if (!comment.empty()) motap.comment(comment);
  for (const auto& g : groups) {
    for (const auto& model : g.model_order) {
      const auto& [motps, motas] = g.by_model.at(model);
      const auto sp = metrics::summarize(motps);
      const auto sa = metrics::summarize(motas);
      sum.row()
          .cell(g.kind)
          .cell(g.condition)
          .cell(model)
          .cell(static_cast<long long>(motas.size()))
          .cell(sp.n ? io::format_fixed(sp.min) : "nan")
          .cell(sp.n ? io::format_fixed(sp.max) : "nan")
          .cell(sp.n ? io::format_fixed(sp.mean) : "nan")
          .cell(sa.min)
          .cell(sa.max)
          .cell(sa.mean);
    }
    if (g.paired > 0) {
      motap.row().cell(g.kind).cell(g.condition).cell(g.paired).cell(g.motap_pc).cell(g.motap_cp);
    }
  }
  out.summary_csv = sum.str();
  out.motap_csv = motap.str();
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < std::min(threads, n); ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<SceneEvaluation> run_compare(const config::RunConfig& cfg,
                                         const velocity::VelocityModels* models, int jobs) {
  cfg.validate();
  if (cfg.scenes.device_source == sim::DeviceSource::Estimator && models == nullptr) {
    throw ConfigError("device_source 'estimator' needs trained velocity models (velocity.model_dir)");
  }
  struct Job {
    sim::SceneKind kind;
    int index;
  };
  std::vector<Job> jobs_list;
  for (int i = 0; i < cfg.scenes.n_starting; ++i) jobs_list.push_back({sim::SceneKind::Starting, i});
  for (int i = 0; i < cfg.scenes.n_turning; ++i) jobs_list.push_back({sim::SceneKind::TurningRight, i});

  const auto& durations = cfg.compare.occlusion_durations;
  const auto settings = TrackerSettings::from_config(cfg);
  std::vector<Model> model_list;
  for (const auto& m : cfg.models) model_list.push_back(model_from_string(m));

  std::vector<std::vector<SceneEvaluation>> results(jobs_list.size());
  parallel_for(jobs_list.size(), jobs, [&](std::size_t k) {
    const auto& job = jobs_list[k];
    sim::SceneSpec base = sim::batch_scene_spec(cfg.scenes, job.kind, job.index);
    const auto gt = sim::generate_ground_truth(base);
    for (double d : durations) {
      sim::SceneSpec spec = base;
      spec.occlusions.clear();
      if (d > 0.0) spec.occlusions.push_back({cfg.compare.occlusion_start_offset, d});
      auto scene = sim::simulate_sensors(gt, spec, models);
      scene.id = sim::batch_scene_id(job.kind, job.index);
      SceneEvaluation eval{scene.id, job.kind, condition_label(d), {}};
      for (Model m : model_list) {
        const auto run = run_tracker(scene, m, settings);
        eval.reports.push_back(evaluate(scene, run.rows, to_string(m), cfg.metrics));
      }
      results[k].push_back(std::move(eval));
    }
  });

  // Condition-major order: every scene under the first condition, then the next.
  std::vector<SceneEvaluation> out;
  for (std::size_t c = 0; c < durations.size(); ++c) {
    for (auto& r : results) out.push_back(std::move(r[c]));
  }
  return out;
}

std::string provenance_comment(const config::RunConfig& cfg) {
  return "config=" + config::config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
}

}  // namespace cooptrack::pipeline
