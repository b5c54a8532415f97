#include <algorithm>
#include <filesystem>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "cooptrack/error.hpp"
#include "cooptrack/regression_forest.hpp"

using namespace cooptrack;
using namespace cooptrack::forest;

namespace {

FeatureLayout layout(std::size_t n) {
  FeatureLayout l{3, {}};
  for (std::size_t i = 0; i < n; ++i) l.names.push_back("f" + std::to_string(i));
  return l;
}

struct Data {
  Eigen::MatrixXd X;
  std::vector<double> y;
};

Data make_data(std::mt19937_64& rng, int n, int d, const std::function<double(const Eigen::VectorXd&)>& rule) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Data out{Eigen::MatrixXd(n, d), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) out.X(i, j) = u(rng);
    out.y[static_cast<std::size_t>(i)] = rule(out.X.row(i).transpose());
  }
  return out;
}


std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ForestParams small(int trees = 40) {
  ForestParams p;
  p.n_trees = trees;
  return p;
}

}  // namespace

TEST(Forest, Defaults) {
  const ForestParams p;
  EXPECT_EQ(p.n_trees, 300);
  EXPECT_EQ(p.max_depth, 6);
}

TEST(Forest, ConstantTargets) {
  std::mt19937_64 rng(1);
  const auto d = make_data(rng, 200, 4, [](const Eigen::VectorXd&) { return 3.25; });
  const auto f = RegressionForest::train(d.X, d.y, 5, layout(4), small());
  for (int i = 0; i < 20; ++i) {
    const auto p = f.predict(to_vec(d.X.row(i).transpose()));
    EXPECT_EQ(p.mean, 3.25);
    EXPECT_EQ(p.variance, 0.0);
  }
}

TEST(Forest, CopiedFeatureIsLearned) {
  std::mt19937_64 rng(2);
  const auto rule = [](const Eigen::VectorXd& x) { return 4.0 * x(1); };
  const auto train = make_data(rng, 1000, 3, rule);
  auto params = small(60);
  params.feature_fraction = 1.0;
  const auto f = RegressionForest::train(train.X, train.y, 11, layout(3), params);
  const auto check = [&](const Data& d) {
    double ss_res = 0.0;
    double ss_tot = 0.0;
    double mean = 0.0;
    for (double v : d.y) mean += v / static_cast<double>(d.y.size());
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
      const double p = f.predict(to_vec(d.X.row(i).transpose())).mean;
      ss_res += std::pow(p - d.y[static_cast<std::size_t>(i)], 2);
      ss_tot += std::pow(d.y[static_cast<std::size_t>(i)] - mean, 2);
    }
    return 1.0 - ss_res / ss_tot;
  };
  EXPECT_GT(check(train), 0.99);
  EXPECT_GT(check(make_data(rng, 500, 3, rule)), 0.99);
}

TEST(Forest, DepthIsBounded) {
  std::mt19937_64 rng(3);
  const auto d = make_data(rng, 500, 3, [](const Eigen::VectorXd& x) { return std::sin(5 * x(0)) + x(2); });
  const auto f = RegressionForest::train(d.X, d.y, 1, layout(3), small(20));
  for (const auto& t : f.trees()) EXPECT_LE(t.depth(), 6);
}

TEST(Forest, SeedDeterminism) {
  std::mt19937_64 rng(4);
  const auto d = make_data(rng, 300, 3, [](const Eigen::VectorXd& x) { return x(0) - x(2); });
  const auto a = RegressionForest::train(d.X, d.y, 9, layout(3), small(10));
  const auto b = RegressionForest::train(d.X, d.y, 9, layout(3), small(10));
  const auto c = RegressionForest::train(d.X, d.y, 10, layout(3), small(10));
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a.trees() == c.trees());
}

TEST(Forest, VarianceIsMeanSquaredTreeDeviation) {
  std::mt19937_64 rng(5);
  const auto d = make_data(rng, 400, 5, [](const Eigen::VectorXd& x) { return x(0) * x(1) + x(3); });
  const auto f = RegressionForest::train(d.X, d.y, 3, layout(5), small(50));
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    std::vector<double> outs;
    for (const auto& t : f.trees()) outs.push_back(t.predict(x));
    long double mean = 0.0L;
    for (double o : outs) mean += o;
    mean /= outs.size();
    long double var = 0.0L;
    for (double o : outs) var += (o - mean) * (o - mean);
    var /= outs.size();
    const auto p = f.predict(x);
    EXPECT_NEAR(p.mean, static_cast<double>(mean), 1e-12);
    EXPECT_NEAR(p.variance, static_cast<double>(var), 1e-12);
  }
}

TEST(Forest, TwoTreeExample) {
  const RegressionForest f(layout(1), {RegressionTree::leaf(1.0), RegressionTree::leaf(3.0)});
  const auto p = f.predict(std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(p.mean, 2.0);
  EXPECT_DOUBLE_EQ(p.variance, 1.0);
}

TEST(Forest, IdenticalTreesHaveZeroVariance) {
  const RegressionForest f(layout(1), std::vector<RegressionTree>(7, RegressionTree::leaf(1.5)));
  EXPECT_EQ(f.predict(std::vector<double>{0.0}).variance, 0.0);
}

TEST(Forest, MeanIsPermutationInvariant) {
  std::mt19937_64 rng(6);
  const auto d = make_data(rng, 300, 2, [](const Eigen::VectorXd& x) { return x(0) + 2 * x(1); });
  const auto f = RegressionForest::train(d.X, d.y, 4, layout(2), small(30));
  auto trees = f.trees();
  std::shuffle(trees.begin(), trees.end(), rng);
  const RegressionForest g(f.layout(), trees);
  const std::vector<double> x = {0.3, -0.2};
  EXPECT_NEAR(f.predict(x).mean, g.predict(x).mean, 1e-12);
  EXPECT_NEAR(f.predict(x).variance, g.predict(x).variance, 1e-12);
}

TEST(Forest, JsonRoundTrip) {
  std::mt19937_64 rng(7);
  const auto d = make_data(rng, 200, 3, [](const Eigen::VectorXd& x) { return x(2); });
  const auto f = RegressionForest::train(d.X, d.y, 8, layout(3), small(5));
  const auto g = RegressionForest::from_json(Json::parse(f.to_json().dump()));
  EXPECT_TRUE(f == g);
  const auto path = std::filesystem::temp_directory_path() / "cooptrack_forest_roundtrip.json";
  f.save(path);
  EXPECT_TRUE(RegressionForest::load(path) == f);
  std::filesystem::remove(path);
}

TEST(Forest, LayoutMismatchIsRejected) {
  const RegressionForest f(layout(3), {RegressionTree::leaf(1.0)});
  EXPECT_THROW(f.predict(std::vector<double>{1.0, 2.0}), InvalidArgument);
}

TEST(Forest, InsufficientData) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(50, 2);
  std::vector<double> y(50, 1.0);
  EXPECT_THROW(RegressionForest::train(X, y, 1, layout(2)), InvalidArgument);
}

TEST(Forest, MalformedJson) {
  Json j = RegressionForest(layout(1), {RegressionTree::leaf(1.0)}).to_json();
  j["trees"][0]["left"] = Json::array({1, 2});
  EXPECT_THROW(RegressionForest::from_json(j), DataError);
  EXPECT_THROW(RegressionForest::from_json(Json::object()), DataError);
}
