#include "cooptrack/regression_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <utility>

#include "cooptrack/csv.hpp"
#include "cooptrack/error.hpp"

namespace cooptrack::forest {

namespace {

// Unbiased index in [0, n) from raw engine output; independent of the
// standard library's distribution implementation.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % range);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, std::span<const double> y, const ForestParams& params,
              std::mt19937_64& rng)
      : X_(X), y_(y), params_(params), rng_(rng) {
    const auto p = static_cast<std::size_t>(X.cols());
    mtry_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(params.feature_fraction * static_cast<double>(p))));
    mtry_ = std::min(mtry_, p);
    feature_pool_.resize(p);
  }

  RegressionTree build(std::vector<std::size_t> sample) {
    tree_ = RegressionTree{};
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  int new_node(double value) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    return static_cast<int>(tree_.feature.size()) - 1;
  }

  int grow(std::vector<std::size_t>& idx, int depth) {
    double sum = 0.0;
    for (auto i : idx) sum += y_[i];
    const double n = static_cast<double>(idx.size());
    const double mean = sum / n;
    const int node = new_node(mean);

    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    if (depth >= params_.max_depth || idx.size() < 2 * min_leaf) return node;
    double sse = 0.0;
    for (auto i : idx) sse += (y_[i] - mean) * (y_[i] - mean);
    if (sse <= 1e-12 * std::max(1.0, n)) return node;

    const Split split = best_split(idx, sum, min_leaf);
    if (split.feature < 0) return node;
    // Require a genuine reduction of the squared error.
    if (split.score - sum * sum / n <= 1e-12 * sse) return node;

    std::vector<std::size_t> left_idx;
    std::vector<std::size_t> right_idx;
    for (auto i : idx) {
      (X_(static_cast<Eigen::Index>(i), split.feature) <= split.threshold ? left_idx : right_idx)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree_.feature[node] = split.feature;
    tree_.threshold[node] = split.threshold;
    const int l = grow(left_idx, depth + 1);
    const int r = grow(right_idx, depth + 1);
    tree_.left[node] = l;
    tree_.right[node] = r;
    return node;
  }

  // Maximizes S_L^2/n_L + S_R^2/n_R, which is equivalent to minimizing the
  // summed squared error of the children.
  Split best_split(const std::vector<std::size_t>& idx, double total, std::size_t min_leaf) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
    const std::size_t p = feature_pool_.size();
    for (std::size_t k = 0; k < mtry_; ++k) {
      std::swap(feature_pool_[k], feature_pool_[k + draw_index(rng_, p - k)]);
    }

    Split best;
    const std::size_t n = idx.size();
    pairs_.resize(n);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const int f = static_cast<int>(feature_pool_[k]);
      for (std::size_t m = 0; m < n; ++m) {
        pairs_[m] = {X_(static_cast<Eigen::Index>(idx[m]), f), y_[idx[m]]};
      }
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (std::size_t m = 0; m + 1 < n; ++m) {
        left_sum += pairs_[m].second;
        const std::size_t nl = m + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        if (!(pairs_[m].first < pairs_[m + 1].first)) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(nl) +
                             right_sum * right_sum / static_cast<double>(nr);
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = 0.5 * (pairs_[m].first + pairs_[m + 1].first);
          // Midpoint may round onto the upper value for adjacent doubles.
          if (!(best.threshold < pairs_[m + 1].first)) best.threshold = pairs_[m].first;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  std::span<const double> y_;
  const ForestParams& params_;
  std::mt19937_64& rng_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::pair<double, double>> pairs_;
  RegressionTree tree_;
};

void check_params(const ForestParams& p) {
  if (p.n_trees < 1 || p.max_depth < 0 || p.min_samples_leaf < 1 ||
      !(p.feature_fraction > 0.0 && p.feature_fraction <= 1.0)) {
    throw InvalidArgument("invalid forest parameters");
  }
}

}  // namespace

RegressionTree RegressionTree::leaf(double value) {
  return RegressionTree{{-1}, {0.0}, {-1}, {-1}, {value}};
}

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (feature[node] >= 0) {
    node = x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node] : right[node];
  }
  return value[node];
}

int RegressionTree::depth() const {
  // Iterative walk carrying node depth.
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (feature[node] >= 0) {
      stack.push_back({left[node], d + 1});
      stack.push_back({right[node], d + 1});
    }
  }
  return deepest;
}

RegressionForest::RegressionForest(FeatureLayout layout, std::vector<RegressionTree> trees,
                                   std::uint64_t seed, ForestParams params)
    : layout_(std::move(layout)), trees_(std::move(trees)), seed_(seed), params_(params) {
  if (trees_.empty()) throw InvalidArgument("a forest needs at least one tree");
}

RegressionForest RegressionForest::train(const Eigen::MatrixXd& features,
                                         std::span<const double> targets, std::uint64_t seed,
                                         FeatureLayout layout, ForestParams params) {
  check_params(params);
  const auto n = static_cast<std::size_t>(features.rows());
  if (n < 100) {
    throw InvalidArgument("forest training needs at least 100 samples, got " + std::to_string(n));
  }
  if (targets.size() != n) throw InvalidArgument("feature and target counts differ");
  if (layout.size() != static_cast<std::size_t>(features.cols())) {
    throw InvalidArgument("feature layout does not match the feature matrix");
  }
  if (!features.allFinite()) throw InvalidArgument("training features contain NaN or inf");

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = draw_index(rng, n);
    TreeBuilder builder(features, targets, params, rng);
    trees.push_back(builder.build(std::move(sample)));
  }
  return RegressionForest(std::move(layout), std::move(trees), seed, params);
}

void RegressionForest::check_input(std::span<const double> x) const {
  if (x.size() != layout_.size()) {
    throw InvalidArgument("feature vector has " + std::to_string(x.size()) +
                          " entries, forest layout expects " + std::to_string(layout_.size()));
  }
}

std::vector<double> RegressionForest::tree_outputs(std::span<const double> x) const {
  check_input(x);
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict(x));
  return out;
}

Prediction RegressionForest::predict(std::span<const double> x) const {
  const auto outputs = tree_outputs(x);
  const auto n = static_cast<double>(outputs.size());
  double mean = 0.0;
  for (double o : outputs) mean += o;
  mean /= n;
  double var = 0.0;
  for (double o : outputs) var += (o - mean) * (o - mean);
  return {mean, var / n};
}

Json RegressionForest::to_json() const {
  Json trees = Json::array();
  for (const auto& t : trees_) {
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"value", t.value}});
  }
  return {{"format", "cooptrack.forest"},
          {"format_version", kForestFormatVersion},
          {"seed", seed_},
          {"params",
           {{"n_trees", params_.n_trees},
            {"max_depth", params_.max_depth},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"feature_fraction", params_.feature_fraction}}},
          {"layout", {{"version", layout_.version}, {"features", layout_.names}}},
          {"trees", std::move(trees)}};
}

RegressionForest RegressionForest::from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "cooptrack.forest" ||
        j.at("format_version").get<int>() != kForestFormatVersion) {
      throw DataError("unsupported forest format");
    }
    FeatureLayout layout{j.at("layout").at("version").get<int>(),
                         j.at("layout").at("features").get<std::vector<std::string>>()};
    ForestParams params;
    const auto& p = j.at("params");
    params.n_trees = p.at("n_trees").get<int>();
    params.max_depth = p.at("max_depth").get<int>();
    params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    params.feature_fraction = p.at("feature_fraction").get<double>();

    std::vector<RegressionTree> trees;
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      jt.at("feature").get_to(t.feature);
      jt.at("threshold").get_to(t.threshold);
      jt.at("left").get_to(t.left);
      jt.at("right").get_to(t.right);
      jt.at("value").get_to(t.value);
      const std::size_t m = t.feature.size();
      if (m == 0 || t.threshold.size() != m || t.left.size() != m || t.right.size() != m ||
          t.value.size() != m) {
        throw DataError("forest tree arrays have inconsistent lengths");
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (t.feature[i] < 0) continue;
        if (static_cast<std::size_t>(t.feature[i]) >= layout.size() || t.left[i] <= static_cast<int>(i) ||
            t.right[i] <= static_cast<int>(i) || static_cast<std::size_t>(t.left[i]) >= m ||
            static_cast<std::size_t>(t.right[i]) >= m) {
          throw DataError("forest tree node " + std::to_string(i) + " is malformed");
        }
      }
      trees.push_back(std::move(t));
    }
    return RegressionForest(std::move(layout), std::move(trees), j.at("seed").get<std::uint64_t>(),
                            params);
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed forest JSON: ") + e.what());
  }
}

void RegressionForest::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, to_json().dump() + "\n");
}

RegressionForest RegressionForest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open forest file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw DataError("forest file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace cooptrack::forest
