#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cooptrack/regression_forest.hpp"
#include "cooptrack/scene_sim.hpp"
#include "cooptrack/sensors.hpp"
#include "cooptrack/signal_features.hpp"

namespace cooptrack::velocity {

// Feature layout v1, in order:
//   per signal in {acc_h, acc_v, gyr_h, gyr_v}: 1 s centered window mean, energy
//   per signal in {acc_h, acc_v}: normalized |DFT_k|, k = 0..5, trailing 5.12 s
//   with GNSS only: gnss_v orthonormal polynomial coefficients 0..3 over 5.0 s,
//   divided by sqrt(window length)
// acc_h / gyr_h are horizontal magnitudes, acc_v / gyr_v the vertical axis.
inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr double kStatWindow = 1.0;       // [s]
inline constexpr double kGnssWindow = 5.0;       // [s]
inline constexpr std::size_t kGnssDegree = 3;
inline constexpr double kGnssStaleAfter = 2.0;   // [s] switch to the outage model

forest::FeatureLayout feature_layout(bool with_gnss);

struct FeatureVector {
  int layout_version = kFeatureLayoutVersion;
  bool with_gnss = false;
  std::vector<double> values;
};

struct VelocityModels {
  forest::RegressionForest with_gnss;
  forest::RegressionForest no_gnss;

  void save(const std::filesystem::path& dir) const;
  static VelocityModels load(const std::filesystem::path& dir);
};

// Precomputes per-sample signals for one IMU/GNSS recording and evaluates
// the feature vector at any IMU index past the warm-up.
class FeatureExtractor {
 public:
  FeatureExtractor(std::span<const ImuSample> imu, std::span<const GnssSample> gnss);

  // First IMU index with a full DFT window.
  static constexpr std::size_t first_index() { return features::kDftWindow - 1; }
  std::size_t size() const { return acc_h_.size(); }

  // Index into the GNSS stream whose held features apply at IMU index i, when
  // the fix is younger than kGnssStaleAfter and its window is complete.
  std::optional<std::size_t> fresh_gnss(std::size_t i) const;

  FeatureVector features(std::size_t i, bool with_gnss) const;

 private:
  std::vector<double> times_;
  std::vector<double> acc_h_, acc_v_, gyr_h_, gyr_v_;
  std::vector<std::vector<double>> means_, energies_;
  std::vector<double> gnss_times_;
  std::vector<std::optional<Eigen::VectorXd>> gnss_coeffs_;
};

struct VelocityEstimate {
  double t = 0.0;
  double v = 0.0;
  double sigma_v = 0.0;  // floored at ekf::kSigmaVFloor
  bool with_gnss = false;
};

struct ModelSwitch {
  double t = 0.0;
  bool with_gnss = false;  // model in use from t on
};

struct VelocityStream {
  std::vector<VelocityEstimate> estimates;
  std::vector<ModelSwitch> switches;
};

// 50 Hz velocity regression after the 5.12 s warm-up. Uses the GNSS forest
// while a fresh fix exists, the outage forest otherwise.
VelocityStream estimate_velocity(std::span<const ImuSample> imu, std::span<const GnssSample> gnss,
                                 const VelocityModels& models);

// Yaw rate and regressed speed combined into the device message stream.
std::vector<DeviceSample> device_stream(std::span<const ImuSample> imu,
                                        std::span<const GnssSample> gnss,
                                        const VelocityModels& models);

struct TrainingSetSpec {
  int n_rides = 48;
  double ride_duration = 20.0;  // [s]
  int stride = 5;               // IMU samples between training rows
  double holdout_fraction = 0.25;
  sim::SensorNoiseParams noise;
  std::uint64_t seed = 7;
};

struct TrainingSet {
  Eigen::MatrixXd with_gnss;  // rows = samples
  Eigen::MatrixXd no_gnss;
  std::vector<double> targets;
  std::vector<int> ride;
};

// Seeded synthetic rides (starts from rest and turns at cruise speed) with
// their IMU and GNSS streams; rows where fresh GNSS features exist.
TrainingSet generate_training_set(const TrainingSetSpec& spec, int first_ride, int n_rides);

struct TrainingReport {
  VelocityModels models;
  std::size_t n_train = 0;
  std::size_t n_holdout = 0;
  double rmse_with_gnss = 0.0;
  double rmse_no_gnss = 0.0;
  // Mean predicted sigma_v over held-out rows with true speed above 4 m/s.
  double fast_sigma_with_gnss = 0.0;
  double fast_sigma_no_gnss = 0.0;
};

TrainingReport train_velocity_models(const TrainingSetSpec& spec,
                                     const forest::ForestParams& params = {});

double rmse(const forest::RegressionForest& f, const Eigen::MatrixXd& X,
            std::span<const double> y);

}  // namespace cooptrack::velocity
