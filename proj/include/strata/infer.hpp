#pragma once

#include "strata/mesh.hpp"
#include "strata/network.hpp"
#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace strata {

struct InferConfig {
  int S = 16384;
  double radius = 5.0;
  double pixel_size = 0.5;
  LayerSpec layers;
  MeshMode mesh_mode = MeshMode::Averaged;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Mean probability of every plot point over all inference cylinders covering it.
RowMatrix predict_plot(const NetParams& params, const PlotCloud& cloud, const InferConfig& cfg);

/// Row-wise argmax, lowest class id on ties.
std::vector<ClassId> hard_labels(const RowMatrix& probs);

/// Per-layer occupancy and height range from hard labels.
LayerProduct layer_products(const PlotCloud& cloud, std::span<const ClassId> labels, const LayerSpec& layers,
                            double pixel_size);

std::array<LayerMesh, 3> build_meshes(const LayerProduct& product, MeshMode mode);

/// <plot>_<layer>_{occ,hmin,hmax}.asc; heights are NoData where unoccupied.
void write_product_rasters(const std::string& plot_id, const LayerProduct& product,
                           const std::filesystem::path& out_dir);
/// Rasters plus <plot>_<layer>.obj.
void write_products(const std::string& plot_id, const LayerProduct& product,
                    const std::array<LayerMesh, 3>& meshes, const std::filesystem::path& out_dir);

/// Reads the occupancy and height rasters written by write_products.
LayerProduct read_products(const std::string& plot_id, const std::filesystem::path& dir);

}  // namespace strata
