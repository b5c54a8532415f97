#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cooptrack/config.hpp"
#include "cooptrack/error.hpp"

using namespace cooptrack;
using namespace cooptrack::config;

TEST(Config, PublishedDefaultsSnapshot) {
  const RunConfig c = from_json(Json::object());
  EXPECT_EQ(c.filter.process.T, 0.020);
  EXPECT_EQ(c.filter.process.sigma_w_v_dot, 2.5);
  EXPECT_EQ(c.filter.process.sigma_w_gamma_dot, 1.5);
  EXPECT_EQ(c.filter.measurement.sigma_x, 0.15);
  EXPECT_EQ(c.filter.measurement.sigma_y, 0.15);
  EXPECT_EQ(c.filter.measurement.sigma_gamma_dot, 0.3);
  EXPECT_TRUE(c.filter.measurement.r_divide_by_T);
  EXPECT_EQ(c.pixel_manager.gate_distance, 40.0);
  EXPECT_EQ(c.coop_manager.gate_distance, 2.0);
  EXPECT_EQ(c.pixel_manager.miss_ratio_max, 0.30);
  EXPECT_EQ(c.coop_manager.miss_ratio_max, 0.50);
  EXPECT_EQ(c.pixel_manager.update_timeout, 1.0);
  EXPECT_EQ(c.coop_manager.update_timeout, 2.0);
  EXPECT_EQ(c.pixel_manager.min_valid_age, 4);
  EXPECT_EQ(c.metrics.tau, 1.0);
  EXPECT_EQ(c.metrics.alpha, 0.025);
  EXPECT_EQ(c.metrics.beta, 0.01);
  EXPECT_EQ(c.scenes.n_turning, 74);
  EXPECT_EQ(c.scenes.n_starting, 87);
  EXPECT_EQ(c.velocity.forest.n_trees, 300);
  EXPECT_EQ(c.velocity.forest.max_depth, 6);
  EXPECT_EQ(c.compare.occlusion_durations, (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(Config, JsonRoundTrip) {
  RunConfig c = from_json(Json::object());
  c.seed = 42;
  c.apply_seed();
  c.scenes.occlusions = {{5.0, 1.0}};
  c.filter.measurement.r_divide_by_T = false;
  const auto back = from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(back.scenes.seed, 42u);
  EXPECT_EQ(back.velocity.training.seed, 42u);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(from_json(Json::parse(R"({"sede": 3})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"filter": {"T": 0.02, "sigma": 1}})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"manager": {"coop": {"gate": 2}}})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"scenes": {"occlusions": [{"start": 5}]}})")), ConfigError);
}

TEST(Config, InvalidValuesAreConfigErrors) {
  EXPECT_THROW(from_json(Json::parse(R"({"filter": {"T": -1}})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"models": ["Q"]})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"filter": {"T": "fast"}})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"scenes": {"device_source": "radio"}})")), ConfigError);
}

TEST(Config, HashChangesWithContent) {
  const RunConfig a = from_json(Json::object());
  const RunConfig b = from_json(Json::parse(R"({"metrics": {"tau": 0.5}})"));
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  RunConfig c = a;
  c.jobs = 7;
  c.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(c));
}

TEST(Config, EnvironmentSeedOverride) {
  const auto path = std::filesystem::temp_directory_path() / "cooptrack_config_env.json";
  std::ofstream(path) << R"({"seed": 5})";
  ::unsetenv("COOPTRACK_SEED");
  EXPECT_EQ(resolve_config(path).seed, 5u);
  ::setenv("COOPTRACK_SEED", "99", 1);
  const auto c = resolve_config(path);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.scenes.seed, 99u);
  ::setenv("COOPTRACK_SEED", "x9", 1);
  EXPECT_THROW(resolve_config(path), ConfigError);
  ::unsetenv("COOPTRACK_SEED");
  std::filesystem::remove(path);
}

TEST(Config, MalformedFile) {
  const auto path = std::filesystem::temp_directory_path() / "cooptrack_config_bad.json";
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), ConfigError);
}
