#include "cooptrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "cooptrack/error.hpp"

namespace cooptrack::assoc {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), cost_(rows * cols, fill), forbidden_(rows * cols, 0) {}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n_cols = rows.empty() ? 0 : rows.front().size();
  CostMatrix m(rows.size(), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols) throw InvalidArgument("cost matrix rows differ in length");
    for (std::size_t c = 0; c < n_cols; ++c) m.set_cost(r, c, rows[r][c]);
  }
  return m;
}

std::vector<Assignment> munkres_solve(const CostMatrix& c) {
  if (c.empty()) return {};

  double max_allowed = 0.0;
  bool any_allowed = false;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      if (c.forbidden(r, j)) continue;
      const double v = c.cost(r, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidArgument("munkres_solve: allowed costs must be finite and non-negative");
      }
      max_allowed = std::max(max_allowed, v);
      any_allowed = true;
    }
  }
  if (!any_allowed) return {};

  // Square problem; forbidden and padded cells get a sentinel larger than any
  // sum of allowed costs so that the cardinality of allowed pairs is maximized
  // first.
  const std::size_t n = std::max(c.rows(), c.cols());
  const double sentinel = (max_allowed + 1.0) * static_cast<double>(n + 1);
  const auto cell = [&](std::size_t r, std::size_t j) {
    if (r >= c.rows() || j >= c.cols() || c.forbidden(r, j)) return sentinel;
    return c.cost(r, j);
  };

  // Shortest augmenting path with row/column potentials; 1-based with a
  // virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_slack(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Assignment> out;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = row_of_col[j] - 1;
    const std::size_t col = j - 1;
    if (r < c.rows() && col < c.cols() && !c.forbidden(r, col)) out.push_back({r, col});
  }
  std::sort(out.begin(), out.end(), [](const Assignment& a, const Assignment& b) {
    return a.row < b.row;
  });
  return out;
}

double total_cost(const CostMatrix& c, std::span<const Assignment> assignment) {
  double sum = 0.0;
  for (const auto& a : assignment) sum += c.cost(a.row, a.col);
  return sum;
}

double penalized_mahalanobis(const DeviceResidual& r) {
  const Eigen::LLT<Eigen::Matrix2d> llt(r.S);
  const bool symmetric = (r.S - r.S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + r.S.cwiseAbs().maxCoeff());
  if (llt.info() != Eigen::Success || !symmetric || !r.S.allFinite()) {
    throw InvalidArgument("penalized_mahalanobis: S must be symmetric positive definite");
  }
  const double quad = r.y.dot(llt.solve(r.y));
  // ln det S from the Cholesky diagonal.
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double radicand = quad + log_det;
  return radicand > 0.0 ? std::sqrt(radicand) : 0.0;
}

DeviceResidual device_residual(const DeviceMeasurement& m, const ekf::StateEstimate& track,
                               const ekf::MeasurementNoiseParams& n, double T) {
  const auto meas = ekf::Measurement::device_only(0.0, m.gamma_dot, m.v, m.sigma_v);
  const Eigen::MatrixXd H = ekf::measurement_matrix(meas.kind);
  const Eigen::MatrixXd R = ekf::measurement_noise(meas, n, T);
  DeviceResidual r;
  r.y = ekf::measurement_vector(meas) - H * track.state.to_vector();
  r.S = H * track.covariance * H.transpose() + R;
  return r;
}

std::optional<int> assign_device(const DeviceMeasurement& m,
                                 std::span<const DeviceCandidate> tracks,
                                 const ekf::MeasurementNoiseParams& n, double T, double gate) {
  std::optional<int> best_id;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cand : tracks) {
    const double d = penalized_mahalanobis(device_residual(m, cand.estimate, n, T));
    if (d < best || (d == best && best_id && cand.id < *best_id)) {
      best = d;
      best_id = cand.id;
    }
  }
  if (best_id && best <= gate) return best_id;
  return std::nullopt;
}

std::optional<std::size_t> assign_device(const DeviceMeasurement& m,
                                         std::span<const ekf::StateEstimate> tracks,
                                         const ekf::MeasurementNoiseParams& n, double T,
                                         double gate) {
  std::vector<DeviceCandidate> cands;
  cands.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    cands.push_back({static_cast<int>(i), tracks[i]});
  }
  const auto id = assign_device(m, std::span<const DeviceCandidate>(cands), n, T, gate);
  if (!id) return std::nullopt;
  return static_cast<std::size_t>(*id);
}

}  // namespace cooptrack::assoc
