#include "helpers.hpp"

#include "strata/error.hpp"
#include "strata/synthgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace strata {
namespace {

SceneConfig small_scene(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.extent = {12.0, 12.0};
  cfg.deciduous = 1;
  cfg.coniferous = 1;
  cfg.shrubs = 2;
  cfg.gv_patches = 2;
  cfg.pulse_density = 15.0;
  cfg.seed = seed;
  return cfg;
}

TEST(Synth, DeterministicPerSeed) {
  const auto a = generate_plot(small_scene(1)), b = generate_plot(small_scene(1)), c = generate_plot(small_scene(2));
  EXPECT_EQ(a.cloud.points(), b.cloud.points());
  EXPECT_NE(a.cloud.points(), c.cloud.points());
}

TEST(Synth, LabelsAgreeWithInstanceGeometry) {
  const auto s = generate_plot(small_scene(3));
  std::array<int, kNumClasses> seen{};
  for (const auto& p : s.cloud.points()) {
    ASSERT_TRUE(p.label);
    ++seen[static_cast<std::size_t>(class_index(*p.label))];
    EXPECT_TRUE(s.cloud.extent().x >= p.x - s.cloud.origin().x);
    if (*p.label == ClassId::Ground) {
      EXPECT_LT(std::abs(p.z), 0.2);
      continue;
    }
    bool inside = false;
    for (const auto& in : s.instances)
      if (instance_class(in.kind) == *p.label && in.contains(p.x, p.y, p.z, 1e-6)) inside = true;
    EXPECT_TRUE(inside) << class_name(*p.label) << " at " << p.x << " " << p.y << " " << p.z;
  }
  for (int k = 0; k < kNumClasses; ++k) EXPECT_GT(seen[static_cast<std::size_t>(k)], 0) << k;
}

TEST(Synth, NoVegetationMeansAllGround) {
  auto cfg = small_scene(4);
  cfg.deciduous = cfg.coniferous = cfg.shrubs = cfg.gv_patches = 0;
  const auto s = generate_plot(cfg);
  EXPECT_TRUE(s.instances.empty());
  EXPECT_GT(s.cloud.size(), 0u);
  for (const auto& p : s.cloud.points()) EXPECT_EQ(*p.label, ClassId::Ground);
}

TEST(Synth, ConeColumn) {
  Instance cone;
  cone.kind = InstanceKind::Coniferous;
  cone.center = {0, 0};
  cone.radius = 2.0;
  cone.base = 6.0;
  cone.top = 14.0;
  const auto apex = cone.column(0, 0);
  ASSERT_TRUE(apex);
  EXPECT_EQ(apex->second, 14.0);
  const auto half = cone.column(1.0, 0);
  EXPECT_DOUBLE_EQ(half->second, 10.0);
  EXPECT_EQ(half->first, 6.0);
  EXPECT_FALSE(cone.column(2.1, 0));
  EXPECT_TRUE(cone.contains(0.5, 0.5, 8.0));
  EXPECT_FALSE(cone.contains(1.9, 0, 13.0));
}

TEST(Synth, InvalidConfigRejected) {
  auto cfg = small_scene(5);
  cfg.extent = {0, 1};
  EXPECT_THROW(generate_plot(cfg), ConfigError);
}

TEST(Annotation, HidesGvAndAFractionOfGround) {
  auto cfg = small_scene(6);
  cfg.extent = {20.0, 20.0};
  const auto s = generate_plot(cfg);
  AnnotationConfig a;
  a.seed = 9;
  a.ground_unlabeled_fraction = 0.3;
  const auto ann = simulate_annotation(s.cloud, a);
  std::size_t ground = 0, hidden = 0;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    const auto full = *s.cloud[i].label;
    const auto l = ann[i].label;
    if (full == ClassId::GroundVegetation) EXPECT_FALSE(l);
    else if (full == ClassId::Ground) {
      ++ground;
      hidden += !l;
    } else
      EXPECT_EQ(l, full);
  }
  EXPECT_NEAR(static_cast<double>(hidden) / static_cast<double>(ground), 0.3, 0.03);
  a.ground_unlabeled_fraction = 1.5;
  EXPECT_THROW(simulate_annotation(s.cloud, a), ConfigError);
}

TEST(Annotation, ManifestRoundTrip) {
  const auto cfg = small_scene(7);
  const auto s = generate_plot(cfg);
  const auto dir = test::temp_dir("manifest");
  write_scene_manifest(cfg, s, dir / "scene.json");
  const auto back = read_scene_instances(dir / "scene.json");
  ASSERT_EQ(back.size(), s.instances.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].kind, s.instances[i].kind);
    EXPECT_EQ(back[i].center, s.instances[i].center);
    EXPECT_EQ(back[i].top, s.instances[i].top);
    EXPECT_EQ(back[i].parent, s.instances[i].parent);
  }
}

}  // namespace
}  // namespace strata
