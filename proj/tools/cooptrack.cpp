// Command line front end: simulate, track, evaluate, compare, train-velocity.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "cooptrack/config.hpp"
#include "cooptrack/csv.hpp"
#include "cooptrack/error.hpp"
#include "cooptrack/pipeline.hpp"
#include "cooptrack/scene_io.hpp"
#include "cooptrack/velocity_estimator.hpp"

namespace fs = std::filesystem;
using namespace cooptrack;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct Options {
  std::string config_path;
  std::string out;
  int jobs = 0;
  int n_starting = -1;
  int n_turning = -1;
  std::string scene;
  std::string tracks;
  std::string model = "P";
  std::string manifest;
  std::string tracks_root;
};

config::RunConfig load(const Options& o) {
  auto cfg = config::resolve_config(o.config_path.empty() ? std::nullopt
                                                          : std::optional<fs::path>(o.config_path));
  if (o.n_starting >= 0) cfg.scenes.n_starting = o.n_starting;
  if (o.n_turning >= 0) cfg.scenes.n_turning = o.n_turning;
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

std::optional<velocity::VelocityModels> models_for(const config::RunConfig& cfg) {
  if (cfg.scenes.device_source != sim::DeviceSource::Estimator) return std::nullopt;
  if (cfg.velocity.model_dir.empty()) {
    throw ConfigError("scenes.device_source 'estimator' requires velocity.model_dir");
  }
  return velocity::VelocityModels::load(cfg.velocity.model_dir);
}

int cmd_simulate(const Options& o) {
  const auto cfg = load(o);
  const auto models = models_for(cfg);
  const fs::path out = cfg.output_dir;
  const std::string comment = pipeline::provenance_comment(cfg);

  struct Item {
    sim::SceneKind kind;
    int index;
  };
  std::vector<Item> items;
  for (int i = 0; i < cfg.scenes.n_starting; ++i) items.push_back({sim::SceneKind::Starting, i});
  for (int i = 0; i < cfg.scenes.n_turning; ++i) items.push_back({sim::SceneKind::TurningRight, i});

  std::vector<Json> entries(items.size());
  pipeline::parallel_for(items.size(), cfg.jobs, [&](std::size_t k) {
    const auto spec = sim::batch_scene_spec(cfg.scenes, items[k].kind, items[k].index);
    auto scene = sim::generate_scene(spec, models ? &*models : nullptr);
    scene.id = sim::batch_scene_id(items[k].kind, items[k].index);
    const fs::path rel = fs::path("scenes") / scene.id;
    io::write_scene(out / rel, scene, comment);
    entries[k] = {{"id", scene.id}, {"kind", sim::to_string(spec.kind)}, {"path", rel.string()},
                  {"seed", spec.seed}};
  });

  const Json manifest = {{"config_hash", config::config_hash(cfg)},
                         {"seed", cfg.seed},
                         {"scenes", entries},
                         {"config", config::to_json(cfg)}};
  io::write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  std::printf("wrote %zu scenes to %s\n", items.size(), out.string().c_str());
  return kOk;
}

int cmd_track(const Options& o) {
  const auto cfg = load(o);
  const fs::path scene_dir = o.scene;
  const auto scene = io::read_scene(scene_dir);
  const auto model = pipeline::model_from_string(o.model);
  const auto run = pipeline::run_tracker(scene, model, pipeline::TrackerSettings::from_config(cfg));
  const fs::path out = o.out.empty() ? scene_dir : fs::path(o.out);
  const std::string comment = pipeline::provenance_comment(cfg);
  io::write_file_atomic(out / ("tracks_" + o.model + ".csv"), pipeline::tracks_csv(run, comment));
  io::write_file_atomic(out / ("assignments_" + o.model + ".csv"),
                        pipeline::assignments_csv(run, comment));
  std::printf("%zu track rows, %zu assignment entries\n", run.rows.size(), run.log.size());
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const auto cfg = load(o);
  const std::string comment = pipeline::provenance_comment(cfg);

  if (!o.manifest.empty()) {
    const fs::path manifest_path = o.manifest;
    Json manifest;
    try {
      manifest = Json::parse(io::read_file(manifest_path));
    } catch (const Json::exception& e) {
      throw DataError(manifest_path.string() + ": " + e.what());
    }
    const fs::path base = manifest_path.parent_path();
    const fs::path tracks_root = o.tracks_root.empty() ? base : fs::path(o.tracks_root);
    std::vector<pipeline::SceneEvaluation> evals;
    for (const auto& entry : manifest.at("scenes")) {
      const auto scene = io::read_scene(base / entry.at("path").get<std::string>());
      pipeline::SceneEvaluation e{scene.id, scene.spec.kind, "scene", {}};
      for (const auto& m : cfg.models) {
        const auto rows = pipeline::read_tracks_csv(tracks_root / entry.at("path").get<std::string>() /
                                                    ("tracks_" + m + ".csv"));
        e.reports.push_back(pipeline::evaluate(scene, rows, m, cfg.metrics));
      }
      evals.push_back(std::move(e));
    }
    const auto tables = pipeline::aggregate(evals, cfg.metrics, comment);
    const fs::path out = cfg.output_dir;
    io::write_file_atomic(out / "per_scene.csv", tables.per_scene_csv);
    io::write_file_atomic(out / "summary.csv", tables.summary_csv);
    io::write_file_atomic(out / "motap.csv", tables.motap_csv);
    std::fputs(tables.summary_csv.c_str(), stdout);
    return kOk;
  }

  if (o.scene.empty() || o.tracks.empty()) {
    throw ConfigError("evaluate needs --scene and --tracks, or --manifest");
  }
  const auto scene = io::read_scene(o.scene);
  const auto rows = pipeline::read_tracks_csv(o.tracks);
  const auto report = pipeline::evaluate(scene, rows, o.model, cfg.metrics);
  const std::string text = report.to_json().dump(2) + "\n";
  if (o.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    io::write_file_atomic(o.out, text);
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  const auto cfg = load(o);
  const auto models = models_for(cfg);
  const auto evals = pipeline::run_compare(cfg, models ? &*models : nullptr, cfg.jobs);
  const auto tables = pipeline::aggregate(evals, cfg.metrics, pipeline::provenance_comment(cfg));
  const fs::path out = cfg.output_dir;
  io::write_file_atomic(out / "per_scene.csv", tables.per_scene_csv);
  io::write_file_atomic(out / "summary.csv", tables.summary_csv);
  io::write_file_atomic(out / "motap.csv", tables.motap_csv);
  std::fputs(tables.summary_csv.c_str(), stdout);
  std::fputs(tables.motap_csv.c_str(), stdout);
  return kOk;
}

int cmd_train_velocity(const Options& o) {
  const auto cfg = load(o);
  const auto report = velocity::train_velocity_models(cfg.velocity.training, cfg.velocity.forest);
  const fs::path out = cfg.output_dir;
  report.models.save(out);

  io::CsvBuilder csv({"model", "n_train", "n_holdout", "rmse", "fast_sigma_mean"});
  csv.comment(pipeline::provenance_comment(cfg));
  csv.row().cell("with_gnss").cell(static_cast<long long>(report.n_train))
      .cell(static_cast<long long>(report.n_holdout)).cell(report.rmse_with_gnss)
      .cell(report.fast_sigma_with_gnss);
  csv.row().cell("no_gnss").cell(static_cast<long long>(report.n_train))
      .cell(static_cast<long long>(report.n_holdout)).cell(report.rmse_no_gnss)
      .cell(report.fast_sigma_no_gnss);
  io::write_file_atomic(out / "velocity_report.csv", csv.str());
  std::fputs(csv.str().c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative cyclist tracking and evaluation"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Generate a batch of synthetic scenes");
  simulate->add_option("-o,--out", o.out, "Output directory");
  simulate->add_option("--n-starting", o.n_starting, "Number of starting scenes");
  simulate->add_option("--n-turning", o.n_turning, "Number of turning-right scenes");
  simulate->add_option("-j,--jobs", o.jobs, "Worker threads");

  auto* track = app.add_subcommand("track", "Run a tracker over one scene directory");
  track->add_option("-s,--scene", o.scene, "Scene directory")->required();
  track->add_option("-m,--model", o.model, "P (position only) or C (cooperative)")
      ->check(CLI::IsMember({"P", "C"}));
  track->add_option("-o,--out", o.out, "Output directory (default: the scene directory)");

  auto* evaluate = app.add_subcommand("evaluate", "Compute MOTP/MOTA for tracker output");
  evaluate->add_option("-s,--scene", o.scene, "Scene directory");
  evaluate->add_option("-t,--tracks", o.tracks, "Track CSV");
  evaluate->add_option("-m,--model", o.model, "Model id recorded in the report");
  evaluate->add_option("--manifest", o.manifest, "Batch manifest written by simulate");
  evaluate->add_option("--tracks-root", o.tracks_root, "Root holding <scene>/tracks_<model>.csv");
  evaluate->add_option("-o,--out", o.out, "Report file (single) or directory (batch)");

  auto* compare = app.add_subcommand("compare", "Simulate, track with P and C, and evaluate");
  compare->add_option("-o,--out", o.out, "Output directory");
  compare->add_option("--n-starting", o.n_starting, "Number of starting scenes");
  compare->add_option("--n-turning", o.n_turning, "Number of turning-right scenes");
  compare->add_option("-j,--jobs", o.jobs, "Worker threads");

  auto* train = app.add_subcommand("train-velocity", "Train the velocity regression forests");
  train->add_option("-o,--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*track) return cmd_track(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*compare) return cmd_compare(o);
    if (*train) return cmd_train_velocity(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const UndefinedMetric& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
