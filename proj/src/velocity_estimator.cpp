#include "cooptrack/velocity_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/error.hpp"

namespace cooptrack::velocity {

namespace {

constexpr std::array<const char*, 4> kImuSignals = {"acc_h", "acc_v", "gyr_h", "gyr_v"};
constexpr std::array<const char*, 2> kDftSignals = {"acc_h", "acc_v"};

// Streams shared with scene_sim so training rides look like scene rides.
constexpr std::uint64_t kGnssStream = 4;
constexpr std::uint64_t kImuStream = 5;
constexpr std::uint64_t kRiderStream = 6;
constexpr std::uint64_t kRideStreamBase = 1000;

std::vector<double> squares(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v * v; });
  return out;
}

}  // namespace

forest::FeatureLayout feature_layout(bool with_gnss) {
  forest::FeatureLayout layout;
  layout.version = kFeatureLayoutVersion;
  for (const char* s : kImuSignals) {
    layout.names.push_back(std::string(s) + "_mean");
    layout.names.push_back(std::string(s) + "_energy");
  }
  for (const char* s : kDftSignals) {
    for (std::size_t k = 0; k < features::kDftOrders; ++k) {
      layout.names.push_back(std::string(s) + "_dft" + std::to_string(k));
    }
  }
  if (with_gnss) {
    for (std::size_t k = 0; k <= kGnssDegree; ++k) {
      layout.names.push_back("gnss_v_poly" + std::to_string(k));
    }
  }
  return layout;
}

void VelocityModels::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  with_gnss.save(dir / "velocity_with_gnss.json");
  no_gnss.save(dir / "velocity_no_gnss.json");
}

VelocityModels VelocityModels::load(const std::filesystem::path& dir) {
  VelocityModels m{forest::RegressionForest::load(dir / "velocity_with_gnss.json"),
                   forest::RegressionForest::load(dir / "velocity_no_gnss.json")};
  if (m.with_gnss.layout() != feature_layout(true) || m.no_gnss.layout() != feature_layout(false)) {
    throw DataError("velocity models in " + dir.string() + " use an unsupported feature layout");
  }
  return m;
}

FeatureExtractor::FeatureExtractor(std::span<const ImuSample> imu,
                                   std::span<const GnssSample> gnss) {
  times_.reserve(imu.size());
  for (const auto& s : imu) {
    times_.push_back(s.t);
    acc_h_.push_back(std::hypot(s.acc.x(), s.acc.y()));
    acc_v_.push_back(s.acc.z());
    gyr_h_.push_back(std::hypot(s.gyr.x(), s.gyr.y()));
    gyr_v_.push_back(s.gyr.z());
  }

  const std::size_t taps = features::taps_for_window(kStatWindow);
  for (const auto* sig : {&acc_h_, &acc_v_, &gyr_h_, &gyr_v_}) {
    means_.push_back(features::centered_moving_average(*sig, taps));
    energies_.push_back(features::centered_moving_average(squares(*sig), taps));
  }

  for (std::size_t j = 0; j < gnss.size(); ++j) {
    gnss_times_.push_back(gnss[j].t);
    std::vector<double> window;
    for (std::size_t k = 0; k <= j; ++k) {
      if (gnss[k].t > gnss[j].t - kGnssWindow + 1e-9) window.push_back(gnss[k].v);
    }
    if (window.size() > kGnssDegree) {
      Eigen::VectorXd c = features::orthopoly_coeffs(window, kGnssDegree);
      c /= std::sqrt(static_cast<double>(window.size()));
      gnss_coeffs_.emplace_back(std::move(c));
    } else {
      gnss_coeffs_.emplace_back(std::nullopt);
    }
  }
}

std::optional<std::size_t> FeatureExtractor::fresh_gnss(std::size_t i) const {
  const double t = times_.at(i);
  const auto it = std::upper_bound(gnss_times_.begin(), gnss_times_.end(), t + 1e-9);
  if (it == gnss_times_.begin()) return std::nullopt;
  const auto j = static_cast<std::size_t>(std::distance(gnss_times_.begin(), it)) - 1;
  if (t - gnss_times_[j] >= kGnssStaleAfter - 1e-9 || !gnss_coeffs_[j]) return std::nullopt;
  return j;
}

FeatureVector FeatureExtractor::features(std::size_t i, bool with_gnss) const {
  if (i < first_index() || i >= size()) {
    throw InvalidArgument("feature index " + std::to_string(i) + " outside the valid range");
  }
  FeatureVector fv;
  fv.with_gnss = with_gnss;
  fv.values.reserve(feature_layout(with_gnss).size());
  for (std::size_t s = 0; s < means_.size(); ++s) {
    fv.values.push_back(means_[s][i]);
    fv.values.push_back(energies_[s][i]);
  }
  const std::size_t lo = i + 1 - features::kDftWindow;
  for (const auto* sig : {&acc_h_, &acc_v_}) {
    const auto d = features::dft_features(std::span(*sig).subspan(lo, features::kDftWindow));
    fv.values.insert(fv.values.end(), d.begin(), d.end());
  }
  if (with_gnss) {
    const auto j = fresh_gnss(i);
    if (!j) throw InvalidArgument("no fresh GNSS features at t = " + std::to_string(times_[i]));
    const auto& c = *gnss_coeffs_[*j];
    fv.values.insert(fv.values.end(), c.data(), c.data() + c.size());
  }
  return fv;
}

VelocityStream estimate_velocity(std::span<const ImuSample> imu, std::span<const GnssSample> gnss,
                                 const VelocityModels& models) {
  VelocityStream out;
  const FeatureExtractor fx(imu, gnss);
  for (std::size_t i = FeatureExtractor::first_index(); i < fx.size(); ++i) {
    const bool use_gnss = fx.fresh_gnss(i).has_value();
    const auto fv = fx.features(i, use_gnss);
    const auto p = (use_gnss ? models.with_gnss : models.no_gnss).predict(fv.values);
    const double sigma = std::max(std::sqrt(p.variance), ekf::kSigmaVFloor);
    if (out.switches.empty() || out.switches.back().with_gnss != use_gnss) {
      out.switches.push_back({imu[i].t, use_gnss});
    }
    out.estimates.push_back({imu[i].t, p.mean, sigma, use_gnss});
  }
  return out;
}

std::vector<DeviceSample> device_stream(std::span<const ImuSample> imu,
                                        std::span<const GnssSample> gnss,
                                        const VelocityModels& models) {
  const auto yaw = features::yaw_rate(imu);
  const auto vel = estimate_velocity(imu, gnss, models);
  std::vector<DeviceSample> out;
  out.reserve(vel.estimates.size());
  const std::size_t offset = yaw.size() - vel.estimates.size();
  for (std::size_t k = 0; k < vel.estimates.size(); ++k) {
    const auto& e = vel.estimates[k];
    out.push_back({e.t, yaw[offset + k].value, e.v, e.sigma_v});
  }
  return out;
}

TrainingSet generate_training_set(const TrainingSetSpec& spec, int first_ride, int n_rides) {
  if (spec.stride < 1 || !(spec.ride_duration > 0.0)) {
    throw InvalidArgument("training spec needs stride >= 1 and a positive ride duration");
  }
  const std::size_t n_with = feature_layout(true).size();
  const std::size_t n_without = feature_layout(false).size();
  std::vector<std::vector<double>> rows_with;
  std::vector<std::vector<double>> rows_without;
  TrainingSet set;

  for (int r = first_ride; r < first_ride + n_rides; ++r) {
    Rng draw(spec.seed, kRideStreamBase + static_cast<std::uint64_t>(r));
    sim::SceneSpec ride;
    ride.duration = spec.ride_duration;
    ride.noise = spec.noise;
    ride.seed = draw.next();
    auto& m = ride.maneuver;
    m.heading0 = draw.uniform(-std::numbers::pi, std::numbers::pi);
    if (r % 2 == 0) {
      ride.kind = sim::SceneKind::Starting;
      // Every fifth start stays at rest to cover the stationary case.
      m.v_peak = r % 10 == 0 ? 0.0 : draw.uniform(1.0, 8.5);
      m.rise_time = draw.uniform(1.5, 5.0);
      m.ramp_center = draw.uniform(4.0, spec.ride_duration - 3.0);
    } else {
      ride.kind = sim::SceneKind::TurningRight;
      m.cruise_speed = draw.uniform(1.0, 8.5);
      m.turn_radius = draw.uniform(4.0, 15.0);
      m.turn_start = draw.uniform(3.0, spec.ride_duration - 4.0);
    }

    const auto gt = sim::generate_ground_truth(ride);
    Rng rider_rng(ride.seed, kRiderStream);
    Rng imu_rng(ride.seed, kImuStream);
    Rng gnss_rng(ride.seed, kGnssStream);
    const auto rider = sim::draw_rider(rider_rng);
    const auto imu = sim::simulate_imu(gt, rider, imu_rng);
    const auto gnss = sim::simulate_gnss(gt, ride.noise, gnss_rng);

    const FeatureExtractor fx(imu, gnss);
    for (std::size_t i = FeatureExtractor::first_index(); i < fx.size();
         i += static_cast<std::size_t>(spec.stride)) {
      if (!fx.fresh_gnss(i)) continue;
      rows_with.push_back(fx.features(i, true).values);
      rows_without.push_back(fx.features(i, false).values);
      set.targets.push_back(gt[i].v);
      set.ride.push_back(r);
    }
  }

  const auto n = static_cast<Eigen::Index>(set.targets.size());
  set.with_gnss.resize(n, static_cast<Eigen::Index>(n_with));
  set.no_gnss.resize(n, static_cast<Eigen::Index>(n_without));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    set.with_gnss.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows_with[k].data(), rows_with[k].size());
    set.no_gnss.row(i) =
        Eigen::Map<const Eigen::RowVectorXd>(rows_without[k].data(), rows_without[k].size());
  }
  return set;
}

double rmse(const forest::RegressionForest& f, const Eigen::MatrixXd& X,
            std::span<const double> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size() || y.empty()) {
    throw InvalidArgument("rmse: feature rows and targets differ in size or are empty");
  }
  double sum = 0.0;
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), X.cols()) = X.row(i);
    const double e = f.predict(row).mean - y[static_cast<std::size_t>(i)];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(y.size()));
}

TrainingReport train_velocity_models(const TrainingSetSpec& spec,
                                     const forest::ForestParams& params) {
  const int n_holdout =
      static_cast<int>(std::lround(spec.holdout_fraction * static_cast<double>(spec.n_rides)));
  const int n_train = spec.n_rides - n_holdout;
  if (n_train < 1 || n_holdout < 1) {
    throw InvalidArgument("training spec must leave at least one ride for training and holdout");
  }
  const auto train = generate_training_set(spec, 0, n_train);
  const auto hold = generate_training_set(spec, n_train, n_holdout);

  TrainingReport report{
      {forest::RegressionForest::train(train.with_gnss, train.targets, spec.seed,
                                       feature_layout(true), params),
       forest::RegressionForest::train(train.no_gnss, train.targets, spec.seed + 1,
                                       feature_layout(false), params)}};
  report.n_train = train.targets.size();
  report.n_holdout = hold.targets.size();
  report.rmse_with_gnss = rmse(report.models.with_gnss, hold.with_gnss, hold.targets);
  report.rmse_no_gnss = rmse(report.models.no_gnss, hold.no_gnss, hold.targets);

  double sw = 0.0;
  double sn = 0.0;
  std::size_t fast = 0;
  std::vector<double> rw(static_cast<std::size_t>(hold.with_gnss.cols()));
  std::vector<double> rn(static_cast<std::size_t>(hold.no_gnss.cols()));
  for (Eigen::Index i = 0; i < hold.with_gnss.rows(); ++i) {
    if (hold.targets[static_cast<std::size_t>(i)] <= 4.0) continue;
    Eigen::Map<Eigen::RowVectorXd>(rw.data(), hold.with_gnss.cols()) = hold.with_gnss.row(i);
    Eigen::Map<Eigen::RowVectorXd>(rn.data(), hold.no_gnss.cols()) = hold.no_gnss.row(i);
    sw += std::sqrt(report.models.with_gnss.predict(rw).variance);
    sn += std::sqrt(report.models.no_gnss.predict(rn).variance);
    ++fast;
  }
  if (fast > 0) {
    report.fast_sigma_with_gnss = sw / static_cast<double>(fast);
    report.fast_sigma_no_gnss = sn / static_cast<double>(fast);
  }
  return report;
}

}  // namespace cooptrack::velocity
