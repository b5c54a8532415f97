#include "cooptrack/signal_features.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cooptrack/error.hpp"

namespace cooptrack::features {

std::vector<double> centered_moving_average(std::span<const double> signal, std::size_t taps) {
  if (taps == 0 || taps % 2 == 0) throw InvalidArgument("moving average needs an odd tap count");
  const std::size_t half = taps / 2;
  const std::size_t n = signal.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += signal[k];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::size_t taps_for_window(double window, double period) {
  const auto half = static_cast<std::size_t>(std::llround(window / (2.0 * period)));
  return 2 * half + 1;
}

std::vector<TimedValue> yaw_rate(std::span<const ImuSample> imu) {
  std::vector<double> gz(imu.size());
  for (std::size_t i = 0; i < imu.size(); ++i) gz[i] = imu[i].gyr.z();
  const auto smooth = centered_moving_average(gz, taps_for_window(kYawRateWindow));
  std::vector<TimedValue> out(imu.size());
  for (std::size_t i = 0; i < imu.size(); ++i) out[i] = {imu[i].t, smooth[i]};
  return out;
}

WindowStats window_features(std::span<const double> window) {
  if (window.empty()) throw InvalidArgument("window_features: empty window");
  double sum = 0.0;
  double sq = 0.0;
  for (double x : window) {
    sum += x;
    sq += x * x;
  }
  const auto n = static_cast<double>(window.size());
  return {sum / n, sq / n};
}

std::array<double, kDftOrders> dft_features(std::span<const double> window) {
  if (window.size() != kDftWindow) {
    throw InvalidArgument("dft_features: expected " + std::to_string(kDftWindow) +
                          " samples, got " + std::to_string(window.size()));
  }
  std::array<double, kDftOrders> out{};
  double energy = 0.0;
  for (double x : window) energy += x * x;
  if (energy == 0.0) return out;

  // Goertzel recursion per bin.
  const auto n = static_cast<double>(kDftWindow);
  for (std::size_t k = 0; k < kDftOrders; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
    const double cw = std::cos(w);
    const double coeff = 2.0 * cw;
    double s1 = 0.0;
    double s2 = 0.0;
    for (double x : window) {
      const double s0 = x + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const double re = s1 - cw * s2;
    const double im = std::sin(w) * s2;
    out[k] = std::hypot(re, im) / energy;
  }
  return out;
}

OrthoPolyBasis::OrthoPolyBasis(std::size_t n, std::size_t degree) {
  if (n <= degree) {
    throw InvalidArgument("orthogonal polynomial window of " + std::to_string(n) +
                          " samples cannot carry degree " + std::to_string(degree));
  }
  const std::size_t cols = degree + 1;
  basis_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  // Centered, scaled index keeps the monomials well conditioned.
  const double center = 0.5 * static_cast<double>(n - 1);
  const double scale = center > 0.0 ? center : 1.0;
  Eigen::VectorXd u(n);
  for (std::size_t i = 0; i < n; ++i) u(i) = (static_cast<double>(i) - center) / scale;

  Eigen::VectorXd mono = Eigen::VectorXd::Ones(n);
  for (std::size_t k = 0; k < cols; ++k) {
    Eigen::VectorXd q = mono;
    // Modified Gram-Schmidt, run twice.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        q -= basis_.col(j).dot(q) * basis_.col(j);
      }
    }
    const double norm = q.norm();
    if (!(norm > 1e-12)) throw InvalidArgument("degenerate orthogonal polynomial window");
    basis_.col(k) = q / norm;
    mono = mono.cwiseProduct(u);
  }
}

Eigen::VectorXd OrthoPolyBasis::coefficients(std::span<const double> window) const {
  if (window.size() != size()) throw InvalidArgument("window length does not match the basis");
  const Eigen::Map<const Eigen::VectorXd> x(window.data(), static_cast<Eigen::Index>(window.size()));
  return basis_.transpose() * x;
}

Eigen::VectorXd OrthoPolyBasis::reconstruct(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != basis_.cols()) throw InvalidArgument("coefficient count mismatch");
  return basis_ * coefficients;
}

Eigen::VectorXd orthopoly_coeffs(std::span<const double> window, std::size_t degree) {
  return OrthoPolyBasis(window.size(), degree).coefficients(window);
}

}  // namespace cooptrack::features
