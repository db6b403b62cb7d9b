#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Semantic classes. Ids are stable: they are written to point files.
enum class ClassId : std::uint8_t {
  Ground = 0,
  GroundVegetation = 1,
  Understory = 2,
  Stem = 3,
  Deciduous = 4,
  Coniferous = 5,
};

inline constexpr int kNumClasses = 6;
inline constexpr int kUnlabeledId = -1;

/// A point label; std::nullopt means the point is unlabeled.
using Label = std::optional<ClassId>;

constexpr int class_index(ClassId c) { return static_cast<int>(c); }
std::string_view class_name(ClassId c);

/// Maps an integer id (-1 for unlabeled) to a label; throws ConfigError when out of range.
Label label_from_id(int id);
constexpr int label_to_id(Label l) { return l ? class_index(*l) : kUnlabeledId; }

/// Vegetation layers that carry occupancy rasters.
enum class Layer : std::uint8_t { GroundVegetation = 0, Understory = 1, Overstory = 2 };
inline constexpr std::array<Layer, 3> kLayers = {Layer::GroundVegetation, Layer::Understory,
                                                 Layer::Overstory};
constexpr int layer_index(Layer l) { return static_cast<int>(l); }
std::string_view layer_name(Layer l);  // "gv", "understory", "overstory"

/// Layer a class contributes occupancy to. Ground and Stem contribute to none.
std::optional<Layer> layer_of(ClassId c);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct PointRecord {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;              // above ground, >= 0
  std::uint32_t intensity = 0;
  std::uint8_t return_number = 1;
  Label label;
  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

/// Height thresholds (meters) separating the three vegetation layers.
struct LayerSpec {
  double gv_low = 0.5;
  double gv_high = 1.5;   // == understory low
  double under_high = 5.0;  // == overstory min

  void validate() const;
};

/// A ground-normalized point cloud of one plot. Immutable after construction.
class PlotCloud {
 public:
  PlotCloud() = default;
  /// Validates every point and the footprint; throws ConfigError on violation.
  PlotCloud(std::string plot_id, Vec2 origin, Vec2 extent, std::vector<PointRecord> points);
  /// Footprint taken as the bounding box of the points.
  static PlotCloud from_points(std::string plot_id, std::vector<PointRecord> points);

  const std::string& plot_id() const { return plot_id_; }
  Vec2 origin() const { return origin_; }
  Vec2 extent() const { return extent_; }
  const std::vector<PointRecord>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const PointRecord& operator[](std::size_t i) const { return points_[i]; }

  /// Divisor used to normalize intensities (95th percentile, 1 if that is zero).
  double intensity_scale() const { return intensity_scale_; }

  /// Copy of this cloud with labels replaced (size must match).
  PlotCloud with_labels(const std::vector<Label>& labels) const;
  std::vector<Label> labels() const;

 private:
  std::string plot_id_;
  Vec2 origin_;
  Vec2 extent_;
  std::vector<PointRecord> points_;
  double intensity_scale_ = 1.0;
};

/// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace strata
