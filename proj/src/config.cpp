#include "cooptrack/config.hpp"

#include <cstdlib>
#include <set>

#include "cooptrack/csv.hpp"
#include "cooptrack/error.hpp"

namespace cooptrack::config {

namespace {

// Reads an object section, remembering which keys were consumed so that
// leftovers can be reported.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + "." + key);
  }

  const Json* raw(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_manager(Section s, tracking::ManagerConfig& m) {
  s.get("gate_distance", m.gate_distance);
  s.get("miss_ratio_max", m.miss_ratio_max);
  s.get("update_timeout", m.update_timeout);
  s.get("min_valid_age", m.min_valid_age);
  s.finish();
}

Json manager_json(const tracking::ManagerConfig& m) {
  return {{"gate_distance", m.gate_distance},
          {"miss_ratio_max", m.miss_ratio_max},
          {"update_timeout", m.update_timeout},
          {"min_valid_age", m.min_valid_age}};
}

void read_noise(Section s, sim::SensorNoiseParams& n) {
  s.get("sigma_detection", n.sigma_detection);
  s.get("sigma_device_gamma_dot", n.sigma_device_gamma_dot);
  s.get("sigma_device_v", n.sigma_device_v);
  s.get("device_delay", n.device_delay);
  s.get("sigma_gnss_v", n.sigma_gnss_v);
  s.get("sigma_gnss_position", n.sigma_gnss_position);
  s.get("detection_miss_probability", n.detection_miss_probability);
  s.finish();
}

Json noise_json(const sim::SensorNoiseParams& n) {
  return {{"sigma_detection", n.sigma_detection},
          {"sigma_device_gamma_dot", n.sigma_device_gamma_dot},
          {"sigma_device_v", n.sigma_device_v},
          {"device_delay", n.device_delay},
          {"sigma_gnss_v", n.sigma_gnss_v},
          {"sigma_gnss_position", n.sigma_gnss_position},
          {"detection_miss_probability", n.detection_miss_probability}};
}

std::vector<sim::OcclusionWindow> read_occlusions(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<sim::OcclusionWindow> out;
  for (const auto& item : j) {
    Section s(item, path + "[]");
    sim::OcclusionWindow w;
    s.get("start_offset", w.start_offset);
    s.get("duration", w.duration);
    s.finish();
    out.push_back(w);
  }
  return out;
}

}  // namespace

void RunConfig::apply_seed() {
  scenes.seed = seed;
  velocity.training.seed = seed;
}

void RunConfig::validate() const {
  try {
    filter.process.validate();
    filter.measurement.validate();
    pixel_filter.validate();
    pixel_manager.validate();
    coop_manager.validate();
    metrics.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(filter.process.T > 0.0)) throw ConfigError("filter.T must be positive");
  if (!(filter.device_gate > 0.0)) throw ConfigError("filter.device_gate must be positive");
  if (pixel_manager.mode != tracking::ManagerMode::Pixel2D ||
      coop_manager.mode != tracking::ManagerMode::Coop3D) {
    throw ConfigError("manager modes are fixed per section");
  }
  if (scenes.n_starting < 0 || scenes.n_turning < 0) {
    throw ConfigError("scenes.n_starting and scenes.n_turning must be non-negative");
  }
  for (const auto& m : models) {
    if (m != "P" && m != "C") throw ConfigError("unknown model '" + m + "' (expected P or C)");
  }
  if (models.empty()) throw ConfigError("models must not be empty");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  for (double d : compare.occlusion_durations) {
    if (d < 0.0) throw ConfigError("compare.occlusion_durations must be non-negative");
  }
  if (velocity.training.n_rides < 2 || velocity.training.stride < 1) {
    throw ConfigError("velocity.n_rides must be >= 2 and velocity.stride >= 1");
  }
  if (velocity.forest.n_trees < 1 || velocity.forest.max_depth < 0 ||
      velocity.forest.min_samples_leaf < 1 || !(velocity.forest.feature_fraction > 0.0) ||
      velocity.forest.feature_fraction > 1.0) {
    throw ConfigError("velocity.forest parameters out of range");
  }
}

RunConfig from_json(const Json& j) {
  RunConfig c;
  Section root(j, "config");
  root.get("seed", c.seed);
  root.get("output_dir", c.output_dir);
  root.get("jobs", c.jobs);
  root.get("models", c.models);

  if (auto s = root.child("filter")) {
    s->get("T", c.filter.process.T);
    s->get("sigma_w_gamma_dot", c.filter.process.sigma_w_gamma_dot);
    s->get("sigma_w_v_dot", c.filter.process.sigma_w_v_dot);
    s->get("sigma_x", c.filter.measurement.sigma_x);
    s->get("sigma_y", c.filter.measurement.sigma_y);
    s->get("sigma_gamma_dot", c.filter.measurement.sigma_gamma_dot);
    s->get("r_divide_by_T", c.filter.measurement.r_divide_by_T);
    s->get("device_gate", c.filter.device_gate);
    s->finish();
  }
  if (auto s = root.child("pixel_filter")) {
    s->get("r_px", c.pixel_filter.r_px);
    s->get("q_px", c.pixel_filter.q_px);
    s->get("initial_speed_std", c.pixel_filter.initial_speed_std);
    s->finish();
  }
  if (auto s = root.child("manager")) {
    if (auto p = s->child("pixel")) read_manager(*p, c.pixel_manager);
    if (auto p = s->child("coop")) read_manager(*p, c.coop_manager);
    s->finish();
  }
  if (auto s = root.child("metrics")) {
    s->get("tau", c.metrics.tau);
    s->get("alpha", c.metrics.alpha);
    s->get("beta", c.metrics.beta);
    s->finish();
  }
  if (auto s = root.child("scenes")) {
    auto& b = c.scenes;
    s->get("n_starting", b.n_starting);
    s->get("n_turning", b.n_turning);
    s->get("starting_duration", b.starting_duration);
    s->get("turning_duration", b.turning_duration);
    s->get("jitter", b.jitter);
    std::string source = b.device_source == sim::DeviceSource::GroundTruth ? "ground_truth" : "estimator";
    s->get("device_source", source);
    if (source == "ground_truth") {
      b.device_source = sim::DeviceSource::GroundTruth;
    } else if (source == "estimator") {
      b.device_source = sim::DeviceSource::Estimator;
    } else {
      throw ConfigError(s->path() + ".device_source: expected 'ground_truth' or 'estimator'");
    }
    if (const Json* occ = s->raw("occlusions")) b.occlusions = read_occlusions(*occ, s->path() + ".occlusions");
    if (auto n = s->child("noise")) read_noise(*n, b.noise);
    s->finish();
  }
  if (auto s = root.child("compare")) {
    s->get("occlusion_durations", c.compare.occlusion_durations);
    s->get("occlusion_start_offset", c.compare.occlusion_start_offset);
    s->finish();
  }
  if (auto s = root.child("velocity")) {
    auto& t = c.velocity.training;
    s->get("n_rides", t.n_rides);
    s->get("ride_duration", t.ride_duration);
    s->get("stride", t.stride);
    s->get("holdout_fraction", t.holdout_fraction);
    s->get("model_dir", c.velocity.model_dir);
    if (auto f = s->child("forest")) {
      f->get("n_trees", c.velocity.forest.n_trees);
      f->get("max_depth", c.velocity.forest.max_depth);
      f->get("min_samples_leaf", c.velocity.forest.min_samples_leaf);
      f->get("feature_fraction", c.velocity.forest.feature_fraction);
      f->finish();
    }
    s->finish();
  }
  root.finish();
  c.velocity.training.noise = c.scenes.noise;
  c.apply_seed();
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  Json occ = Json::array();
  for (const auto& w : c.scenes.occlusions) {
    occ.push_back({{"start_offset", w.start_offset}, {"duration", w.duration}});
  }
  const auto& p = c.filter.process;
  const auto& m = c.filter.measurement;
  const auto& t = c.velocity.training;
  const auto& f = c.velocity.forest;
  return {{"seed", c.seed},
          {"output_dir", c.output_dir},
          {"jobs", c.jobs},
          {"models", c.models},
          {"filter",
           {{"T", p.T},
            {"sigma_w_gamma_dot", p.sigma_w_gamma_dot},
            {"sigma_w_v_dot", p.sigma_w_v_dot},
            {"sigma_x", m.sigma_x},
            {"sigma_y", m.sigma_y},
            {"sigma_gamma_dot", m.sigma_gamma_dot},
            {"r_divide_by_T", m.r_divide_by_T},
            {"device_gate", c.filter.device_gate}}},
          {"pixel_filter",
           {{"r_px", c.pixel_filter.r_px},
            {"q_px", c.pixel_filter.q_px},
            {"initial_speed_std", c.pixel_filter.initial_speed_std}}},
          {"manager", {{"pixel", manager_json(c.pixel_manager)}, {"coop", manager_json(c.coop_manager)}}},
          {"metrics", {{"tau", c.metrics.tau}, {"alpha", c.metrics.alpha}, {"beta", c.metrics.beta}}},
          {"scenes",
           {{"n_starting", c.scenes.n_starting},
            {"n_turning", c.scenes.n_turning},
            {"starting_duration", c.scenes.starting_duration},
            {"turning_duration", c.scenes.turning_duration},
            {"jitter", c.scenes.jitter},
            {"device_source",
             c.scenes.device_source == sim::DeviceSource::GroundTruth ? "ground_truth" : "estimator"},
            {"occlusions", occ},
            {"noise", noise_json(c.scenes.noise)}}},
          {"compare",
           {{"occlusion_durations", c.compare.occlusion_durations},
            {"occlusion_start_offset", c.compare.occlusion_start_offset}}},
          {"velocity",
           {{"n_rides", t.n_rides},
            {"ride_duration", t.ride_duration},
            {"stride", t.stride},
            {"holdout_fraction", t.holdout_fraction},
            {"model_dir", c.velocity.model_dir},
            {"forest",
             {{"n_trees", f.n_trees},
              {"max_depth", f.max_depth},
              {"min_samples_leaf", f.min_samples_leaf},
              {"feature_fraction", f.feature_fraction}}}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(io::read_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return from_json(j);
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& path) {
  RunConfig c = path ? load_config(*path) : from_json(Json::object());
  if (const char* env = std::getenv("COOPTRACK_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("COOPTRACK_SEED must be an unsigned integer");
    c.seed = v;
    c.apply_seed();
  }
  return c;
}

std::string config_hash(const RunConfig& c) {
  Json j = to_json(c);
  j.erase("output_dir");
  j.erase("jobs");
  return io::hex64(io::fnv1a(j.dump()));
}

}  // namespace cooptrack::config
