#include "helpers.hpp"

#include "strata/cylinder.hpp"
#include "strata/elevation.hpp"
#include "strata/error.hpp"
#include "strata/raster.hpp"
#include "strata/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>

namespace strata {
namespace {

TEST(Schedule, StepHalving) {
  TrainConfig cfg;
  EXPECT_EQ(learning_rate(cfg, 0), 5e-4);
  EXPECT_EQ(learning_rate(cfg, 19), 5e-4);
  EXPECT_EQ(learning_rate(cfg, 20), 2.5e-4);
  EXPECT_DOUBLE_EQ(learning_rate(cfg, 99), 3.125e-5);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.batch_size = cfg.cylinders_per_epoch + 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.S = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

Cylinder sample_cylinder(unsigned seed) {
  std::mt19937_64 rng(seed);
  static std::vector<PlotCloud> keep;
  keep.push_back(test::random_cloud(rng, 300, 8, 8));
  return extract_cylinder(keep.back(), {4, 4}, 3);
}

TEST(Augment, IdentityAtZero) {
  const Cylinder c = sample_cylinder(61);
  const std::vector<double> zero(c.size(), 0.0);
  const Cylinder a = augment_with(c, 0.0, zero);
  EXPECT_EQ(a.features, c.features);
  EXPECT_EQ(a.point_indices, c.point_indices);
}

TEST(Augment, RotationIsIsometryAndLeavesOtherChannels) {
  const Cylinder c = sample_cylinder(62);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Cylinder a = augment(c, seed);
    for (Eigen::Index i = 0; i < c.features.rows(); i += 5)
      for (Eigen::Index j = i + 1; j < c.features.rows(); j += 7) {
        const double d0 = std::hypot(c.features(i, kDx) - c.features(j, kDx), c.features(i, kDy) - c.features(j, kDy));
        const double d1 = std::hypot(a.features(i, kDx) - a.features(j, kDx), a.features(i, kDy) - a.features(j, kDy));
        EXPECT_NEAR(d0, d1, 1e-9);
      }
    EXPECT_EQ(a.features.col(kZ), c.features.col(kZ));
    EXPECT_EQ(a.features.col(kReturn), c.features.col(kReturn));
    EXPECT_LE((a.features.col(kIntensity) - c.features.col(kIntensity)).cwiseAbs().maxCoeff(), 0.03 + 1e-15);
    EXPECT_EQ(a.xy.size(), c.xy.size());
    EXPECT_EQ(a.xy[0], c.xy[0]);
  }
}

TEST(Adam, ZeroGradient) {
  NetParams p = init_params(1);
  const NetParams orig = p;
  AdamState s;
  const std::vector<double> zero(p.values.size(), 0.0);
  optimizer_step(p, zero, s, 1e-3, 0.0);
  EXPECT_EQ(p, orig);
  optimizer_step(p, zero, s, 1e-3, 0.1);
  for (std::size_t i = 0; i < p.values.size(); ++i) EXPECT_NEAR(p.values[i], orig.values[i] * (1 - 1e-4), 1e-15);
}

TEST(Adam, FirstStepMagnitudeIsLr) {
  NetParams p = init_params(2);
  const NetParams orig = p;
  AdamState s;
  std::vector<double> g(p.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 ? 1.0 : -3.0) * (1.0 + static_cast<double>(i % 7));
  const double lr = 1e-3;
  optimizer_step(p, g, s, lr, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    // m_hat = g, v_hat = g^2 after bias correction
    const double expect = orig.values[i] - lr * g[i] / (std::abs(g[i]) + kAdamEps);
    EXPECT_NEAR(p.values[i], expect, 1e-15);
  }
  // second step with the same gradient: m_hat = g, v_hat = g^2 again
  const NetParams mid = p;
  optimizer_step(p, g, s, lr, 0.0);
  for (std::size_t i = 0; i < g.size(); i += 97) EXPECT_NEAR(mid.values[i] - p.values[i], lr * (g[i] > 0 ? 1 : -1), 1e-9);
}

TEST(Adam, NonFiniteGradientNamesBlock) {
  NetParams p = init_params(3);
  const NetParams orig = p;
  AdamState s;
  std::vector<double> g(p.values.size(), 0.1);
  g[net_layout()[6].offset + 3] = std::numeric_limits<double>::infinity();
  try {
    optimizer_step(p, g, s, 1e-3, 0.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find(net_layout()[6].name), std::string::npos) << e.what();
  }
  EXPECT_EQ(p, orig);
}

std::vector<TrainingPlot> tiny_plots() {
  std::vector<TrainingPlot> out;
  for (unsigned s = 0; s < 2; ++s) {
    std::mt19937_64 rng(70 + s);
    TrainingPlot tp;
    tp.cloud = test::random_cloud(rng, 1500, 8, 8);
    tp.truth = build_layer_truth(tp.cloud, LayerSpec{}, 0.5);
    std::vector<double> z;
    for (const auto& p : tp.cloud.points()) z.push_back(p.z);
    tp.mixture = ecm_fit(z, default_init(z));
    out.push_back(std::move(tp));
  }
  return out;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.cylinders_per_epoch = 4;
  cfg.batch_size = 2;
  cfg.S = 48;
  cfg.radius = 2.0;
  cfg.seed = 17;
  cfg.lr_halving_period = 2;
  cfg.checkpoint_every = 2;
  return cfg;
}

TEST(Fit, DeterministicWithLogAndCheckpoints) {
  const auto plots = tiny_plots();
  const auto cfg = tiny_config();
  const auto dir = test::temp_dir("fit");
  FitOptions opts;
  opts.out_dir = dir;
  int callbacks = 0;
  opts.on_epoch = [&](const EpochLog&) { ++callbacks; };
  const FitResult a = fit(plots, cfg, opts);
  const FitResult b = fit(plots, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, init_params(cfg.seed));
  EXPECT_EQ(callbacks, 3);
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_EQ(a.log[2].lr, learning_rate(cfg, 2));
  for (const auto& e : a.log) EXPECT_NEAR(e.total, e.l3d + e.l2d + 0.1 * e.lelev, 1e-9);

  EXPECT_EQ(load_params(dir / "checkpoint.bin"), a.params);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_e002.bin"));
  std::ifstream log(dir / "train_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "l3d", "l2d", "lelev", "total", "lr"}) EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(lines, 3);
}

TEST(Fit, SeedChangesResult) {
  const auto plots = tiny_plots();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  const auto a = fit(plots, cfg);
  cfg.seed = 18;
  EXPECT_NE(a.params, fit(plots, cfg).params);
}

TEST(Fit, NoPlotsRejected) {
  EXPECT_THROW(fit(std::vector<TrainingPlot>{}, tiny_config()), ConfigError);
}

}  // namespace
}  // namespace strata
