#include "strata/infer.hpp"

#include "strata/cylinder.hpp"
#include "strata/error.hpp"

#include <algorithm>
#include <optional>

namespace strata {

void InferConfig::validate() const {
  if (S < kMinSubsample) throw ConfigError("subsample size must be at least 8");
  if (!(radius > 0.0)) throw ConfigError("cylinder radius must be positive");
  if (!(pixel_size > 0.0)) throw ConfigError("pixel size must be positive");
  layers.validate();
}

RowMatrix predict_plot(const NetParams& params, const PlotCloud& cloud, const InferConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cloud.size());
  RowMatrix sum = RowMatrix::Zero(n, kNumClasses);
  std::vector<int> count(cloud.size(), 0);
  const auto centers = inference_grid(cloud, cfg.radius);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Cylinder cyl = extract_cylinder(cloud, centers[k], cfg.radius);
    if (cyl.empty()) continue;
    const RowMatrix p = forward(params, cyl, cfg.S, derive_seed(cfg.seed, k));
    for (std::size_t i = 0; i < cyl.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(cyl.point_indices[i]);
      sum.row(row) += p.row(static_cast<Eigen::Index>(i));
      ++count[cyl.point_indices[i]];
    }
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (count[i] == 0) throw InternalError("point " + std::to_string(i) + " not covered by any cylinder");
    sum.row(static_cast<Eigen::Index>(i)) /= count[i];
  }
  return sum;
}

std::vector<ClassId> hard_labels(const RowMatrix& probs) {
  std::vector<ClassId> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<ClassId>(best);
  }
  return out;
}

LayerProduct layer_products(const PlotCloud& cloud, std::span<const ClassId> labels, const LayerSpec& layers,
                            double pixel_size) {
  layers.validate();
  if (labels.size() != cloud.size()) throw ConfigError("label count does not match the cloud");
  LayerProduct p = empty_product(RasterGeometry::for_cloud(cloud, pixel_size));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto layer = layer_of(labels[i]);
    if (!layer) continue;
    const auto& pt = cloud[i];
    const auto [r, c] = p.geometry.pixel_of(pt.x, pt.y);
    auto& l = p[*layer];
    if (!l.occupied.at(r, c)) {
      l.occupied.at(r, c) = 1;
      l.hmax.at(r, c) = pt.z;
      l.hmin.at(r, c) = *layer == Layer::Overstory ? pt.z : 0.0;
    } else {
      l.hmax.at(r, c) = std::max(l.hmax.at(r, c), pt.z);
      if (*layer == Layer::Overstory) l.hmin.at(r, c) = std::min(l.hmin.at(r, c), pt.z);
    }
  }
  return p;
}

std::array<LayerMesh, 3> build_meshes(const LayerProduct& product, MeshMode mode) {
  return {build_mesh(product, Layer::GroundVegetation, mode), build_mesh(product, Layer::Understory, mode),
          build_mesh(product, Layer::Overstory, mode)};
}

void write_product_rasters(const std::string& plot_id, const LayerProduct& product,
                           const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw FormatError("cannot create " + out_dir.string() + ": " + ec.message());
  for (Layer layer : kLayers) {
    const auto& l = product[layer];
    const std::string stem = plot_id + "_" + std::string(layer_name(layer));
    Grid<std::optional<double>> occ(product.geometry, std::nullopt);
    Grid<std::optional<double>> lo(product.geometry, std::nullopt), hi(product.geometry, std::nullopt);
    for (int r = 0; r < product.geometry.rows; ++r) {
      for (int c = 0; c < product.geometry.cols; ++c) {
        const bool full = l.occupied.at(r, c) != 0;
        occ.at(r, c) = full ? 1.0 : 0.0;
        if (full) {
          lo.at(r, c) = l.hmin.at(r, c);
          hi.at(r, c) = l.hmax.at(r, c);
        }
      }
    }
    write_ascii_grid(to_ascii(occ), out_dir / (stem + "_occ.asc"));
    write_ascii_grid(to_ascii(lo), out_dir / (stem + "_hmin.asc"));
    write_ascii_grid(to_ascii(hi), out_dir / (stem + "_hmax.asc"));
  }
}

void write_products(const std::string& plot_id, const LayerProduct& product,
                    const std::array<LayerMesh, 3>& meshes, const std::filesystem::path& out_dir) {
  write_product_rasters(plot_id, product, out_dir);
  for (Layer layer : kLayers)
    write_obj(meshes[static_cast<std::size_t>(layer_index(layer))],
              out_dir / (plot_id + "_" + std::string(layer_name(layer)) + ".obj"));
}

LayerProduct read_products(const std::string& plot_id, const std::filesystem::path& dir) {
  LayerProduct p;
  bool first = true;
  for (Layer layer : kLayers) {
    const std::string stem = plot_id + "_" + std::string(layer_name(layer));
    const auto occ = from_ascii(read_ascii_grid(dir / (stem + "_occ.asc")));
    const auto lo = from_ascii(read_ascii_grid(dir / (stem + "_hmin.asc")));
    const auto hi = from_ascii(read_ascii_grid(dir / (stem + "_hmax.asc")));
    if (first) {
      p = empty_product(occ.geometry());
      first = false;
    }
    if (!(occ.geometry() == p.geometry) || !(lo.geometry() == p.geometry) || !(hi.geometry() == p.geometry))
      throw FormatError(dir.string() + ": product rasters of " + plot_id + " disagree on geometry");
    auto& l = p[layer];
    for (int r = 0; r < p.geometry.rows; ++r) {
      for (int c = 0; c < p.geometry.cols; ++c) {
        const bool full = occ.at(r, c).value_or(0.0) > 0.5;
        l.occupied.at(r, c) = full ? 1 : 0;
        if (full) {
          if (!lo.at(r, c) || !hi.at(r, c)) throw FormatError(stem + ": occupied pixel without heights");
          l.hmin.at(r, c) = *lo.at(r, c);
          l.hmax.at(r, c) = *hi.at(r, c);
        }
      }
    }
  }
  return p;
}

}  // namespace strata
