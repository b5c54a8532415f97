#include "cooptrack/scene_io.hpp"

#include "cooptrack/csv.hpp"
#include "cooptrack/error.hpp"

namespace cooptrack::io {

namespace {

void check_increasing(const CsvTable& table, const std::filesystem::path& path) {
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (!(table.rows[i][0] > table.rows[i - 1][0])) {
      throw DataError(path.string() + ":" + std::to_string(table.line_numbers[i]) +
                      ": timestamps must increase");
    }
  }
}

CsvBuilder start(std::initializer_list<std::string_view> header, const std::string& comment) {
  CsvBuilder b(header);
  if (!comment.empty()) b.comment(comment);
  return b;
}

}  // namespace

void write_scene(const std::filesystem::path& dir, const sim::Scene& scene,
                 const std::string& comment) {
  std::filesystem::create_directories(dir);

  auto gt = start({"t", "x", "y", "gamma", "gamma_dot", "v"}, comment);
  for (const auto& s : scene.ground_truth) {
    gt.row().cell(s.t).cell(s.x).cell(s.y).cell(s.gamma).cell(s.gamma_dot).cell(s.v);
  }
  write_file_atomic(dir / "ground_truth.csv", gt.str());

  auto det = start({"t", "x", "y"}, comment);
  for (const auto& d : scene.detections) det.row().cell(d.t).cell(d.x).cell(d.y);
  write_file_atomic(dir / "detections.csv", det.str());

  auto dev = start({"t", "gamma_dot", "v", "sigma_v"}, comment);
  for (const auto& d : scene.device) dev.row().cell(d.t).cell(d.gamma_dot).cell(d.v).cell(d.sigma_v);
  write_file_atomic(dir / "device.csv", dev.str());

  auto gnss = start({"t", "v", "x", "y"}, comment);
  for (const auto& g : scene.gnss) gnss.row().cell(g.t).cell(g.v).cell(g.x).cell(g.y);
  write_file_atomic(dir / "gnss.csv", gnss.str());

  Json occ = Json::array();
  for (const auto& w : scene.spec.occlusions) {
    occ.push_back({{"start_offset", w.start_offset}, {"duration", w.duration}});
  }
  const Json meta = {{"id", scene.id},
                     {"seed", scene.spec.seed},
                     {"frames", scene.ground_truth.size()},
                     {"occlusions", occ},
                     {"spec", sim::to_json(scene.spec)}};
  write_file_atomic(dir / "scene.json", meta.dump(2) + "\n");
}

sim::Scene read_scene(const std::filesystem::path& dir) {
  sim::Scene scene;
  const auto meta_path = dir / "scene.json";
  Json meta;
  try {
    meta = Json::parse(read_file(meta_path));
    scene.id = meta.at("id").get<std::string>();
  } catch (const Json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  try {
    scene.spec = sim::spec_from_json(meta.at("spec"));
  } catch (const Error& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }

  const auto gt_path = dir / "ground_truth.csv";
  const auto gt = read_numeric_csv(gt_path, {"t", "x", "y", "gamma", "gamma_dot", "v"});
  check_increasing(gt, gt_path);
  for (const auto& r : gt.rows) scene.ground_truth.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
  if (scene.ground_truth.empty()) throw DataError(gt_path.string() + ": no ground-truth rows");

  const auto det_path = dir / "detections.csv";
  const auto det = read_numeric_csv(det_path, {"t", "x", "y"});
  check_increasing(det, det_path);
  for (const auto& r : det.rows) scene.detections.push_back({r[0], r[1], r[2]});

  if (const auto p = dir / "device.csv"; std::filesystem::exists(p)) {
    const auto dev = read_numeric_csv(p, {"t", "gamma_dot", "v", "sigma_v"});
    check_increasing(dev, p);
    for (const auto& r : dev.rows) scene.device.push_back({r[0], r[1], r[2], r[3]});
  }
  if (const auto p = dir / "gnss.csv"; std::filesystem::exists(p)) {
    const auto g = read_numeric_csv(p, {"t", "v", "x", "y"});
    check_increasing(g, p);
    for (const auto& r : g.rows) scene.gnss.push_back({r[0], r[1], r[2], r[3]});
  }

  scene.occlusion_mask = sim::occlusion_mask(scene.spec, scene.ground_truth.size());
  return scene;
}

}  // namespace cooptrack::io
