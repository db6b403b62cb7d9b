#pragma once

#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace strata {

/// Occupancy and height range of one layer. Heights are meaningful only on
/// occupied pixels.
struct LayerRaster {
  Grid<std::uint8_t> occupied;
  Grid<double> hmin;
  Grid<double> hmax;
  friend bool operator==(const LayerRaster&, const LayerRaster&) = default;
};

struct LayerProduct {
  RasterGeometry geometry;
  std::array<LayerRaster, 3> layers;

  LayerRaster& operator[](Layer l) { return layers[static_cast<std::size_t>(layer_index(l))]; }
  const LayerRaster& operator[](Layer l) const { return layers[static_cast<std::size_t>(layer_index(l))]; }
  friend bool operator==(const LayerProduct&, const LayerProduct&) = default;
};

/// Empty product (nothing occupied) over the given geometry.
LayerProduct empty_product(const RasterGeometry& geometry);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct LayerMesh {
  Layer layer = Layer::GroundVegetation;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

enum class MeshMode {
  Averaged,  // corner heights averaged over edge-connected occupied pixels sharing the corner
  Flat,      // one closed prism per pixel at its own heights
};

/// Closed, outward-oriented surface over the occupied pixels of one layer.
LayerMesh build_mesh(const LayerProduct& product, Layer layer, MeshMode mode = MeshMode::Averaged);

/// True when every undirected edge belongs to exactly two triangles.
bool is_watertight(const LayerMesh& mesh);
/// Divergence-theorem volume; positive for outward orientation.
double signed_volume(const LayerMesh& mesh);

/// Text OBJ: "v x y z" then "f a b c" with 1-based indices.
void write_obj(const LayerMesh& mesh, const std::filesystem::path& path);
LayerMesh read_obj(const std::filesystem::path& path);

}  // namespace strata
