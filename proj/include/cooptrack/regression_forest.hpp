#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cooptrack/json.hpp"

namespace cooptrack::forest {

struct ForestParams {
  int n_trees = 300;
  int max_depth = 6;
  int min_samples_leaf = 2;
  // Fraction of features examined per split (at least one).
  double feature_fraction = 1.0 / 3.0;
};

// Named, versioned feature ordering a forest was trained on.
struct FeatureLayout {
  int version = 0;
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

// Flat binary tree; a node is a leaf when feature[i] < 0. Samples with
// x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  static RegressionTree leaf(double value);
  double predict(std::span<const double> x) const;
  int depth() const;
  std::size_t node_count() const { return feature.size(); }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;  // mean squared deviation of the trees from `mean`
};

class RegressionForest {
 public:
  RegressionForest() = default;
  RegressionForest(FeatureLayout layout, std::vector<RegressionTree> trees,
                   std::uint64_t seed = 0, ForestParams params = {});

  // Bagged variance-reduction trees. `features` holds one sample per row.
  // Deterministic for a given seed; each tree draws from its own RNG stream.
  static RegressionForest train(const Eigen::MatrixXd& features, std::span<const double> targets,
                                std::uint64_t seed, FeatureLayout layout,
                                ForestParams params = {});

  Prediction predict(std::span<const double> x) const;
  std::vector<double> tree_outputs(std::span<const double> x) const;

  const FeatureLayout& layout() const { return layout_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::uint64_t seed() const { return seed_; }
  const ForestParams& params() const { return params_; }

  Json to_json() const;
  static RegressionForest from_json(const Json& j);
  void save(const std::filesystem::path& path) const;
  static RegressionForest load(const std::filesystem::path& path);

  friend bool operator==(const RegressionForest& a, const RegressionForest& b) {
    return a.layout_ == b.layout_ && a.trees_ == b.trees_ && a.seed_ == b.seed_;
  }

 private:
  void check_input(std::span<const double> x) const;

  FeatureLayout layout_;
  std::vector<RegressionTree> trees_;
  std::uint64_t seed_ = 0;
  ForestParams params_;
};

inline constexpr int kForestFormatVersion = 1;

}  // namespace cooptrack::forest
