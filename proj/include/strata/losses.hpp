#pragma once

#include "strata/elevation.hpp"
#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <array>
#include <span>
#include <utility>

namespace strata {

struct Cylinder;

/// Weights of the 2D and elevation terms in the combined objective.
struct LossWeights {
  double lambda_2d = 1.0;
  double mu_elev = 0.1;
  void validate() const;
};

struct Loss3dOptions {
  bool supervise_gv = false;  // the reference annotations carry no 3D ground-vegetation labels
  std::array<double, kNumClasses> class_weights = {1, 1, 1, 1, 1, 1};
};

/// A loss value and its gradient with respect to the (M x 6) probabilities.
struct LossTerm {
  double value = 0.0;
  RowMatrix grad;
};

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kBceClamp = 1e-7;
inline constexpr double kElevationFloor = 0.01;

/// Mean cross-entropy over supervised points (labeled, and not ground vegetation
/// unless enabled). Zero when no point is supervised.
LossTerm loss_3d(const RowMatrix& probs, std::span<const Label> labels, const Loss3dOptions& opts = {});

/// Per-pixel soft occupancy of the three layers: the max over the pixel's points of
/// p(gv), p(understory) and p(deciduous) + p(coniferous).
struct SoftOccupancy {
  RasterGeometry geometry;
  std::array<Grid<double>, 3> occupancy;
  Grid<std::uint8_t> valid;          // pixel received at least one point
  std::array<Grid<int>, 3> argmax;   // row of the maximizing point, -1 if none

  const Grid<double>& operator[](Layer l) const {
    return occupancy[static_cast<std::size_t>(layer_index(l))];
  }
};

SoftOccupancy project_soft(const RowMatrix& probs, std::span<const Vec2> xy, const RasterGeometry& geometry);
SoftOccupancy project_soft(const RowMatrix& probs, const Cylinder& cylinder, const RasterGeometry& geometry);
/// Same, with each point's (row, col) already resolved inside `geometry`.
SoftOccupancy project_soft_cells(const RowMatrix& probs, std::span<const std::pair<int, int>> cells,
                                 const RasterGeometry& geometry);

/// Clears validity of pixels whose centers fall outside the disk (center, radius).
void restrict_to_disk(SoftOccupancy& occ, Vec2 center, double radius);

struct Loss2d {
  double value = 0.0;
  std::size_t pixels = 0;                  // contributing (layer, pixel) pairs
  std::array<Grid<double>, 3> grad;        // d value / d occupancy
};

/// Mean pixel-wise binary cross-entropy over every (layer, pixel) that is valid in
/// `pred` and not NoData in `truth`. Zero when nothing contributes.
Loss2d loss_2d(const SoftOccupancy& pred, const LayerTruth& truth);

/// Routes occupancy gradients back to the maximizing points (M x 6 result).
RowMatrix project_soft_backward(const SoftOccupancy& occ, const std::array<Grid<double>, 3>& occ_grad,
                                Eigen::Index num_points);

/// Mean negative log-likelihood of elevations under the class-weighted mixture
/// components. The mixture is held fixed.
LossTerm loss_elevation(const RowMatrix& probs, std::span<const double> z, const GammaMixture& mixture);

double total_loss(double l3d, double l2d, double lelev, const LossWeights& w);

}  // namespace strata
