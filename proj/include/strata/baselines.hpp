#pragma once

#include "strata/mesh.hpp"
#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace strata {

// ---------------------------------------------------------------------------
// per-pixel descriptors
// ---------------------------------------------------------------------------

inline constexpr int kPixelFeatureCount = 16;
inline constexpr std::array<double, 11> kElevationBinEdges = {0, 0.5, 1, 1.5, 2, 3, 5, 8, 12, 18, 30};

enum PixelFeature : int {
  kMaxZ = 0, kMinZ, kMeanZ, kStdZ, kMeanIntensity, kMeanReturn, kFirstBin  // kFirstBin .. kFirstBin + 9
};

struct PixelFeatureGrid {
  RasterGeometry geometry;
  RowMatrix values;                  // (rows * cols) x 16, row-major pixel order
  std::vector<std::uint8_t> nonempty;

  std::size_t pixel(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(geometry.cols) + static_cast<std::size_t>(col);
  }
};

/// Elevation bin of z in [0, 30] (30 falls in the last bin); -1 outside.
int elevation_bin(double z);

/// Descriptors of the points in each pixel column; intensity is plot-normalized.
PixelFeatureGrid pixel_features(const PlotCloud& cloud, double pixel_size);

// ---------------------------------------------------------------------------
// models
// ---------------------------------------------------------------------------

/// Per-column z-scoring; zero-variance columns are centered only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const RowMatrix& x);
  RowMatrix apply(const RowMatrix& x) const;
};

struct LogisticOptions {
  int iterations = 500;
  double lr = 0.1;
  double l2 = 1e-4;
};

struct LogisticModel {
  Standardizer standardizer;
  std::vector<double> weights;  // on standardized features
  double bias = 0.0;
  std::optional<double> constant;  // set when trained on a single class
  std::vector<std::string> warnings;
};

/// Gradient descent on mean log-loss + (l2 / 2) |w|^2. Targets are 0/1.
LogisticModel fit_logistic(const RowMatrix& x, std::span<const int> y, const LogisticOptions& opts = {});
std::vector<double> predict_logistic(const LogisticModel& m, const RowMatrix& x);
/// Regularized objective of a fitted model on (x, y).
double logistic_objective(const LogisticModel& m, const RowMatrix& x, std::span<const int> y, double l2 = 1e-4);

enum class ForestTask { Classification, Regression };

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: class id or mean target
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0
  std::uint64_t seed = 0;
  double predict(const double* x) const;
  int depth() const;
};

struct ForestOptions {
  int trees = 100;
  int max_depth = 4;
  bool bootstrap = true;
  std::optional<int> max_features;  // default sqrt(d) for classification, d/3 for regression
  std::uint64_t seed = 0;
};

struct ForestModel {
  ForestTask task = ForestTask::Classification;
  int num_classes = 0;
  std::vector<DecisionTree> trees;
};

/// Classification targets are class ids 0..K-1 stored as doubles.
ForestModel fit_forest(const RowMatrix& x, std::span<const double> y, ForestTask task, const ForestOptions& opts = {});
/// Majority vote (lowest class on ties) or mean of tree outputs.
std::vector<double> predict_forest(const ForestModel& m, const RowMatrix& x);

struct LinearModel {
  Standardizer standardizer;
  std::vector<double> beta;  // intercept, then one coefficient per standardized feature

  /// Intercept and slopes expressed on the raw features.
  double raw_intercept() const;
  std::vector<double> raw_slopes() const;
};

/// Normal equations with a ridge on the slopes; needs at least d + 1 samples.
LinearModel fit_linreg(const RowMatrix& x, std::span<const double> y, double ridge = 1e-8);
std::vector<double> predict_linreg(const LinearModel& m, const RowMatrix& x);

void write_model(std::ostream& out, const LogisticModel& m);
void write_model(std::ostream& out, const ForestModel& m);
void write_model(std::ostream& out, const LinearModel& m);

// ---------------------------------------------------------------------------
// occupancy and height baselines over plots
// ---------------------------------------------------------------------------

struct BaselinePlot {
  PlotCloud cloud;
  LayerTruth truth;       // tri-state occupancy targets
  LayerProduct reference; // reference heights (from complete labels)
};

enum class OccupancyModelKind { Logistic, Forest };
enum class HeightModelKind { Linear, Forest };

struct BaselineModels {
  double pixel_size = 0.5;
  std::array<LogisticModel, 3> logistic;
  std::array<ForestModel, 3> forest;
  std::array<std::optional<LinearModel>, 4> linear;         // per HeightTarget
  std::array<std::optional<ForestModel>, 4> forest_height;  // per HeightTarget
};

BaselineModels train_baselines(std::span<const BaselinePlot> plots, double pixel_size, std::uint64_t seed);

std::array<Grid<std::uint8_t>, 3> predict_occupancy(const BaselineModels& m, OccupancyModelKind kind,
                                                    const PixelFeatureGrid& features);

/// Occupancy from `occ`, heights from `heights` on the occupied pixels.
LayerProduct predict_baseline_product(const BaselineModels& m, OccupancyModelKind occ, HeightModelKind heights,
                                      const PixelFeatureGrid& features);

void write_models(const BaselineModels& m, const std::filesystem::path& dir);

}  // namespace strata
