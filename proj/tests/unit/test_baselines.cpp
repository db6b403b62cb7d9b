#include "helpers.hpp"

#include "strata/baselines.hpp"
#include "strata/error.hpp"

#include <gtest/gtest.h>

#include <random>

namespace strata {
namespace {

TEST(PixelFeatures, TwoPointExample) {
  PlotCloud c("p", {0, 0}, {0.5, 0.5}, {test::pt(0.1, 0.1, 1.0, std::nullopt, 100, 1), test::pt(0.2, 0.2, 3.0, std::nullopt, 100, 2)});
  const auto f = pixel_features(c, 0.5);
  ASSERT_EQ(f.values.rows(), 1);
  EXPECT_EQ(f.values(0, kMaxZ), 3.0);
  EXPECT_EQ(f.values(0, kMinZ), 1.0);
  EXPECT_EQ(f.values(0, kMeanZ), 2.0);
  EXPECT_EQ(f.values(0, kStdZ), 1.0);
  EXPECT_EQ(f.values(0, kMeanReturn), 1.5);
  EXPECT_EQ(f.values(0, kFirstBin + 2), 1.0);  // z = 1 opens bin [1, 1.5)
  EXPECT_EQ(f.values(0, kFirstBin + 4), 0.0);
  EXPECT_EQ(f.values(0, kFirstBin + 5), 1.0);  // z = 3
}

TEST(PixelFeatures, ElevationBins) {
  EXPECT_EQ(elevation_bin(0.0), 0);
  EXPECT_EQ(elevation_bin(0.7), 1);
  EXPECT_EQ(elevation_bin(30.0), 9);
  EXPECT_EQ(elevation_bin(-0.1), -1);
  EXPECT_EQ(elevation_bin(30.5), -1);
}

TEST(PixelFeatures, MatchesPerPixelScan) {
  std::mt19937_64 rng(101);
  const auto cloud = test::random_cloud(rng, 400, 3, 2, 25);
  const auto f = pixel_features(cloud, 0.5);
  for (int r = 0; r < f.geometry.rows; ++r)
    for (int c = 0; c < f.geometry.cols; ++c) {
      std::vector<double> z;
      std::array<double, 10> bins{};
      for (const auto& p : cloud.points()) {
        if (std::min(static_cast<int>(p.y / 0.5), f.geometry.rows - 1) != r) continue;
        if (std::min(static_cast<int>(p.x / 0.5), f.geometry.cols - 1) != c) continue;
        z.push_back(p.z);
        for (int b = 0; b < 10; ++b)
          if (p.z >= kElevationBinEdges[static_cast<std::size_t>(b)] &&
              (p.z < kElevationBinEdges[static_cast<std::size_t>(b) + 1] || (b == 9 && p.z == 30.0)))
            bins[static_cast<std::size_t>(b)] += 1;
      }
      const auto k = static_cast<Eigen::Index>(f.pixel(r, c));
      ASSERT_EQ(f.nonempty[static_cast<std::size_t>(k)] != 0, !z.empty());
      if (z.empty()) continue;
      double mean = 0;
      for (double v : z) mean += v;
      mean /= static_cast<double>(z.size());
      double var = 0;
      for (double v : z) var += (v - mean) * (v - mean);
      EXPECT_EQ(f.values(k, kMaxZ), *std::max_element(z.begin(), z.end()));
      EXPECT_EQ(f.values(k, kMinZ), *std::min_element(z.begin(), z.end()));
      EXPECT_NEAR(f.values(k, kMeanZ), mean, 1e-12);
      EXPECT_NEAR(f.values(k, kStdZ), std::sqrt(var / static_cast<double>(z.size())), 1e-12);
      for (int b = 0; b < 10; ++b) EXPECT_EQ(f.values(k, kFirstBin + b), bins[static_cast<std::size_t>(b)]);
    }
}

TEST(Logistic, SeparableData) {
  RowMatrix x(40, 2);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = i;
    x(i, 1) = (i * 7) % 5;
    y.push_back(i >= 20);
  }
  const auto m = fit_logistic(x, y);
  const auto p = predict_logistic(m, x);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(p[static_cast<std::size_t>(i)] > 0.5, i >= 20) << i;
  EXPECT_GT(m.weights[0], 0.0);
  // more iterations never worsen the objective
  LogisticOptions more;
  more.iterations = 2000;
  EXPECT_LE(logistic_objective(fit_logistic(x, y, more), x, y), logistic_objective(m, x, y) + 1e-12);
}

TEST(Logistic, SingleClassIsConstant) {
  RowMatrix x = RowMatrix::Random(10, 3);
  const std::vector<int> y(10, 1);
  const auto m = fit_logistic(x, y);
  ASSERT_TRUE(m.constant);
  EXPECT_FALSE(m.warnings.empty());
  for (double v : predict_logistic(m, x)) EXPECT_GT(v, 0.5);
  EXPECT_THROW(fit_logistic(x, std::vector<int>(3, 1)), ConfigError);
}

TEST(Forest, PureTargetsAndRegressionMean) {
  RowMatrix x(30, 2);
  std::vector<double> cls, reg;
  for (int i = 0; i < 30; ++i) {
    x(i, 0) = i;
    x(i, 1) = -i;
    cls.push_back(i < 10 ? 0 : (i < 20 ? 1 : 2));
    reg.push_back(4.0);
  }
  ForestOptions o;
  o.trees = 15;
  o.seed = 3;
  const auto f = fit_forest(x, cls, ForestTask::Classification, o);
  EXPECT_EQ(f.num_classes, 3);
  const auto pc = predict_forest(f, x);
  int right = 0;
  for (int i = 0; i < 30; ++i) right += pc[static_cast<std::size_t>(i)] == cls[static_cast<std::size_t>(i)];
  EXPECT_GE(right, 28);
  for (const auto& t : f.trees) EXPECT_LE(t.depth(), o.max_depth);
  const auto r = fit_forest(x, reg, ForestTask::Regression, o);
  for (double v : predict_forest(r, x)) EXPECT_EQ(v, 4.0);
  // deterministic for a seed
  EXPECT_EQ(predict_forest(fit_forest(x, cls, ForestTask::Classification, o), x), pc);
}

TEST(Linreg, ExactAndConstantColumns) {
  RowMatrix x(20, 3);
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = i;
    x(i, 1) = (i * i) % 7;
    x(i, 2) = 5.0;  // constant feature
    y.push_back(1.5 + 2.0 * x(i, 0) - 0.5 * x(i, 1));
  }
  const auto m = fit_linreg(x, y);
  const auto p = predict_linreg(m, x);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(p[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)], 1e-6);
  const auto s = m.raw_slopes();
  EXPECT_NEAR(s[0], 2.0, 1e-6);
  EXPECT_NEAR(s[1], -0.5, 1e-6);
  EXPECT_NEAR(s[2], 0.0, 1e-9);
  EXPECT_THROW(fit_linreg(x.topRows(3), std::span<const double>(y).first(3)), ConfigError);
}

}  // namespace
}  // namespace strata
