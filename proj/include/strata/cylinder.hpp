#pragma once

#include "strata/types.hpp"

#include <cstddef>
#include <vector>

namespace strata {

/// Feature channels of a cylinder point.
enum FeatureChannel : int { kDx = 0, kDy = 1, kZ = 2, kIntensity = 3, kReturn = 4 };
inline constexpr int kFeatureWidth = 5;

/// Intensity normalization clamp (values are divided by the plot's 95th percentile).
inline constexpr double kIntensityClamp = 1.5;

/// Vertical cylinder of infinite extent cut out of a plot.
struct Cylinder {
  Vec2 center;
  double radius = 0.0;
  std::vector<std::size_t> point_indices;  // into the parent cloud, ascending
  std::vector<Vec2> xy;                    // absolute planar coordinates, never augmented
  RowMatrix features;                      // M x kFeatureWidth

  std::size_t size() const { return point_indices.size(); }
  bool empty() const { return point_indices.empty(); }
};

double normalized_intensity(std::uint32_t intensity, double scale);
double normalized_return(std::uint8_t return_number);

/// Points within horizontal distance <= radius of center, with features.
Cylinder extract_cylinder(const PlotCloud& cloud, Vec2 center, double radius);

/// Candidate training centers: regular grid of step radius/5 over the plot extent.
std::vector<Vec2> training_grid(const PlotCloud& cloud, double radius);

/// Inference centers: regular grid of step radius whose disks cover the whole plot.
std::vector<Vec2> inference_grid(const PlotCloud& cloud, double radius);

}  // namespace strata
