#pragma once

#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace strata {

/// Axis-aligned pixel grid. Row 0 is the southernmost row in memory.
struct RasterGeometry {
  Vec2 origin;            // lower-left corner
  double pixel_size = 0.5;
  int rows = 1;
  int cols = 1;

  /// Smallest grid at this pixel size anchored at the plot origin covering its extent.
  static RasterGeometry for_cloud(const PlotCloud& cloud, double pixel_size);

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool contains(double x, double y) const;
  Vec2 pixel_center(int row, int col) const;

  /// Pixel holding (x, y). A point on an interior boundary belongs to the higher-index
  /// pixel; one on the outer right/top edge to the last row/column. Throws
  /// std::out_of_range when (x, y) lies outside the footprint.
  std::pair<int, int> pixel_of(double x, double y) const;

  /// Sub-window covering the square [c - r, c + r]^2, clipped to this grid.
  /// row/col offsets of the window inside the parent are returned alongside.
  struct Window;
  Window window(Vec2 center, double half_width) const;

  friend bool operator==(const RasterGeometry&, const RasterGeometry&) = default;
};

struct RasterGeometry::Window {
  RasterGeometry geometry;
  int row_offset = 0;
  int col_offset = 0;
};

/// Dense row-major grid of values with a geometry.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(RasterGeometry g, T fill) : geom_(g), cells_(g.size(), fill) { geom_.validate(); }

  const RasterGeometry& geometry() const { return geom_; }
  int rows() const { return geom_.rows; }
  int cols() const { return geom_.cols; }

  T& at(int row, int col) { return cells_[index(row, col)]; }
  const T& at(int row, int col) const { return cells_[index(row, col)]; }
  const std::vector<T>& cells() const { return cells_; }
  std::vector<T>& cells() { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(geom_.cols) +
           static_cast<std::size_t>(col);
  }
  RasterGeometry geom_;
  std::vector<T> cells_;
};

enum class Cell : std::uint8_t { Empty = 0, Full = 1, NoData = 2 };

using TriStateRaster = Grid<Cell>;

/// Ground-truth occupancy for the three layers; all share one geometry.
struct LayerTruth {
  std::array<TriStateRaster, 3> layers;

  TriStateRaster& operator[](Layer l) { return layers[static_cast<std::size_t>(layer_index(l))]; }
  const TriStateRaster& operator[](Layer l) const {
    return layers[static_cast<std::size_t>(layer_index(l))];
  }
  const RasterGeometry& geometry() const { return layers[0].geometry(); }
  friend bool operator==(const LayerTruth&, const LayerTruth&) = default;
};

/// Two-phase tri-state truth: labeled crown/understory points first, then the
/// max height of unlabeled points per pixel without overwriting Full cells.
LayerTruth build_layer_truth(const PlotCloud& cloud, const LayerSpec& layers, double pixel_size);

/// Sub-raster of every layer covering `window` (from truth.geometry().window(...)).
LayerTruth crop(const LayerTruth& truth, const RasterGeometry::Window& window);

// ---------------------------------------------------------------------------
// ESRI ASCII grid
// ---------------------------------------------------------------------------

inline constexpr double kNoDataValue = -9999.0;

/// Values in memory order (row 0 south); NoData cells hold kNoDataValue.
struct AsciiGrid {
  RasterGeometry geometry;
  std::vector<double> values;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(geometry.cols) +
                  static_cast<std::size_t>(col)];
  }
};

void write_ascii_grid(const AsciiGrid& grid, const std::filesystem::path& path);
AsciiGrid read_ascii_grid(const std::filesystem::path& path);

/// Full=1, Empty=0, NoData=-9999.
void write_tri_raster(const TriStateRaster& raster, const std::filesystem::path& path);
TriStateRaster read_tri_raster(const std::filesystem::path& path);

/// Optional-valued grids (heights, binary occupancy) map nullopt <-> NoData.
AsciiGrid to_ascii(const Grid<std::optional<double>>& grid);
Grid<std::optional<double>> from_ascii(const AsciiGrid& grid);

}  // namespace strata
