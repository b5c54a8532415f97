#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Central differences of f at x, one column per input coordinate.
inline Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

// RK4 integration of x' = v cos g, y' = v sin g, g' = const over duration T.
// State layout [x, y, gamma, gamma_dot, v].
inline Eigen::VectorXd rk4_constant_turn(Eigen::VectorXd s, double T, double h) {
  const auto deriv = [](const Eigen::VectorXd& q) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(5);
    d(0) = q(4) * std::cos(q(2));
    d(1) = q(4) * std::sin(q(2));
    d(2) = q(3);
    return d;
  };
  const auto steps = static_cast<long>(std::llround(T / h));
  for (long i = 0; i < steps; ++i) {
    const Eigen::VectorXd k1 = deriv(s);
    const Eigen::VectorXd k2 = deriv(s + 0.5 * h * k1);
    const Eigen::VectorXd k3 = deriv(s + 0.5 * h * k2);
    const Eigen::VectorXd k4 = deriv(s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

// The bike-model transition written out literally, without any small yaw-rate
// branch; valid away from gamma_dot + w_gamma_dot = 0.
inline Eigen::VectorXd bike_g(const Eigen::VectorXd& s, const Eigen::Vector2d& w, double T) {
  const double yr = s(3) + w(0);
  const double speed = 0.5 * T * w(1) + s(4);
  const double a = speed * std::sin(T * yr) / yr;
  const double b = speed * (1.0 - std::cos(T * yr)) / yr;
  Eigen::VectorXd out(5);
  out << s(0) + std::cos(s(2)) * a - std::sin(s(2)) * b, s(1) + std::sin(s(2)) * a + std::cos(s(2)) * b,
      s(2) + yr * T, yr, s(4) + w(1) * T;
  return out;
}

inline Eigen::VectorXd bike_f(const Eigen::VectorXd& s, double T) {
  return bike_g(s, Eigen::Vector2d::Zero(), T);
}

struct BruteForceResult {
  int pairs = 0;
  double cost = 0.0;
};

// Exhaustive search: the most allowed pairs first, then the lowest cost.
inline BruteForceResult brute_force_assignment(const Eigen::MatrixXd& cost,
                                               const Eigen::Matrix<bool, -1, -1>& forbidden) {
  const bool transpose = cost.rows() > cost.cols();
  const Eigen::MatrixXd c = transpose ? Eigen::MatrixXd(cost.transpose()) : cost;
  const Eigen::Matrix<bool, -1, -1> f =
      transpose ? Eigen::Matrix<bool, -1, -1>(forbidden.transpose()) : forbidden;
  std::vector<int> cols(static_cast<std::size_t>(c.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  BruteForceResult best{-1, std::numeric_limits<double>::infinity()};
  do {
    BruteForceResult r;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const int j = cols[static_cast<std::size_t>(i)];
      if (f(i, j)) continue;
      ++r.pairs;
      r.cost += c(i, j);
    }
    if (r.pairs > best.pairs || (r.pairs == best.pairs && r.cost < best.cost)) best = r;
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// |X_k| by direct summation.
inline double naive_dft_magnitude(const std::vector<double>& x, int k) {
  std::complex<double> sum = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = -2.0 * std::numbers::pi * k * static_cast<double>(i) / n;
    sum += x[i] * std::complex<double>(std::cos(a), std::sin(a));
  }
  return std::abs(sum);
}

// Least-squares polynomial fit via the normal equations on a monomial basis
// over indices mapped to [-1, 1]; returns fitted values.
inline Eigen::VectorXd normal_equations_fit(const std::vector<double>& y, int degree) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd A(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    for (int p = 0; p <= degree; ++p) A(i, p) = std::pow(u, p);
  }
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::VectorXd coeffs = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  return A * coeffs;
}

struct Scalar1D {
  double mean;
  double var;
};

// Scalar Kalman measurement update.
inline Scalar1D kalman_1d(double prior_mean, double prior_var, double z, double r_var) {
  const double k = prior_var / (prior_var + r_var);
  return {prior_mean + k * (z - prior_mean), (1.0 - k) * prior_var};
}

}  // namespace oracle
