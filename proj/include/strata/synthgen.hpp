#pragma once

#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace strata {

/// Scene shapes. Crowns of deciduous trees, shrubs and ground-vegetation patches
/// are vertical-axis solids of revolution; coniferous crowns are cones; stems
/// are vertical cylinders from the ground to the crown base.
enum class InstanceKind : std::uint8_t { Deciduous, Coniferous, Shrub, GroundVegetation, Stem };

std::string_view instance_kind_name(InstanceKind k);
ClassId instance_class(InstanceKind k);

struct Instance {
  InstanceKind kind = InstanceKind::Shrub;
  Vec2 center;
  double radius = 1.0;  // horizontal radius of the solid
  double base = 0.0;    // lowest z of the solid
  double top = 1.0;     // highest z of the solid
  int parent = -1;      // stems: index of their crown instance

  /// Vertical extent [zb, zt] of the solid along the vertical line through (x, y).
  std::optional<std::pair<double, double>> column(double x, double y) const;
  bool contains(double x, double y, double z, double tol = 1e-9) const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntensityModel {
  double mean = 1000.0;
  double sd = 200.0;
};

struct SceneConfig {
  std::string plot_id = "plot";
  Vec2 origin{0.0, 0.0};
  Vec2 extent{20.0, 20.0};
  double pulse_density = 30.0;  // pulses per m^2
  double stem_density = 20.0;   // lateral returns per m^2 of stem surface
  double ground_jitter = 0.02;

  int deciduous = 3;
  int coniferous = 3;
  int shrubs = 6;
  int gv_patches = 5;

  Range tree_top{11.0, 18.0};
  Range deciduous_radius{2.0, 3.5};
  Range deciduous_depth{4.0, 7.0};
  Range conifer_radius{1.5, 2.5};
  Range conifer_length{5.0, 8.0};
  Range stem_radius{0.15, 0.3};
  Range shrub_top{1.8, 4.5};
  Range shrub_radius{0.8, 1.6};
  Range shrub_depth{0.8, 1.6};
  Range gv_top{0.7, 1.3};
  Range gv_radius{1.0, 2.5};

  /// Probability that a pulse crossing a solid returns an echo from it.
  std::array<double, 5> hit_probability = {0.75, 0.65, 0.7, 0.75, 0.9};  // by InstanceKind
  /// Probability that a pulse continues after an echo.
  double occlusion = 0.6;
  int max_returns = 5;

  /// Per-class intensity, indexed by class id; scaled by 0.7^(return - 1).
  std::array<IntensityModel, kNumClasses> intensity = {{
      {800.0, 150.0}, {1500.0, 250.0}, {1800.0, 300.0}, {1200.0, 200.0}, {2400.0, 350.0}, {1500.0, 300.0}}};

  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  PlotCloud cloud;  // every point labeled
  std::vector<Instance> instances;
};

Scene generate_plot(const SceneConfig& cfg);

/// Mimics the reference annotation: ground vegetation left unlabeled and a
/// fraction of ground points unlabeled (they define empty truth pixels).
struct AnnotationConfig {
  double ground_unlabeled_fraction = 0.5;
  bool hide_ground_vegetation = true;
  std::uint64_t seed = 0;
};

PlotCloud simulate_annotation(const PlotCloud& full, const AnnotationConfig& cfg);

/// JSON scene manifest: config summary and one record per instance.
void write_scene_manifest(const SceneConfig& cfg, const Scene& scene, const std::filesystem::path& path);
std::vector<Instance> read_scene_instances(const std::filesystem::path& path);

}  // namespace strata
