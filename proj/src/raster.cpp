#include "strata/raster.hpp"

#include "strata/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace strata {

RasterGeometry RasterGeometry::for_cloud(const PlotCloud& cloud, double pixel_size) {
  if (!(pixel_size > 0.0)) throw ConfigError("pixel size must be > 0");
  RasterGeometry g;
  g.origin = cloud.origin();
  g.pixel_size = pixel_size;
  auto count = [&](double len) {
    return std::max(1, static_cast<int>(std::ceil(len / pixel_size - 1e-9)));
  };
  g.cols = count(cloud.extent().x);
  g.rows = count(cloud.extent().y);
  return g;
}

void RasterGeometry::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("raster must have at least one row and column");
  if (!(pixel_size > 0.0)) throw ConfigError("pixel size must be > 0");
}

bool RasterGeometry::contains(double x, double y) const {
  return x >= origin.x && y >= origin.y && x <= origin.x + cols * pixel_size &&
         y <= origin.y + rows * pixel_size;
}

Vec2 RasterGeometry::pixel_center(int row, int col) const {
  return {origin.x + (col + 0.5) * pixel_size, origin.y + (row + 0.5) * pixel_size};
}

std::pair<int, int> RasterGeometry::pixel_of(double x, double y) const {
  if (!contains(x, y)) throw std::out_of_range("point outside raster footprint");
  const int col = std::min(cols - 1, static_cast<int>(std::floor((x - origin.x) / pixel_size)));
  const int row = std::min(rows - 1, static_cast<int>(std::floor((y - origin.y) / pixel_size)));
  return {row, col};
}

RasterGeometry::Window RasterGeometry::window(Vec2 center, double half_width) const {
  auto index = [&](double v, double o, int n) {
    return std::clamp(static_cast<int>(std::floor((v - o) / pixel_size)), 0, n - 1);
  };
  const int c0 = index(center.x - half_width, origin.x, cols);
  const int c1 = index(center.x + half_width, origin.x, cols);
  const int r0 = index(center.y - half_width, origin.y, rows);
  const int r1 = index(center.y + half_width, origin.y, rows);
  Window w;
  w.row_offset = r0;
  w.col_offset = c0;
  w.geometry.pixel_size = pixel_size;
  w.geometry.origin = {origin.x + c0 * pixel_size, origin.y + r0 * pixel_size};
  w.geometry.rows = r1 - r0 + 1;
  w.geometry.cols = c1 - c0 + 1;
  return w;
}

LayerTruth crop(const LayerTruth& truth, const RasterGeometry::Window& w) {
  const auto& g = truth.geometry();
  if (w.row_offset < 0 || w.col_offset < 0 || w.row_offset + w.geometry.rows > g.rows ||
      w.col_offset + w.geometry.cols > g.cols)
    throw ConfigError("crop window exceeds the raster");
  LayerTruth out;
  for (std::size_t l = 0; l < 3; ++l) {
    out.layers[l] = TriStateRaster(w.geometry, Cell::NoData);
    for (int r = 0; r < w.geometry.rows; ++r)
      for (int c = 0; c < w.geometry.cols; ++c)
        out.layers[l].at(r, c) = truth.layers[l].at(r + w.row_offset, c + w.col_offset);
  }
  return out;
}

LayerTruth build_layer_truth(const PlotCloud& cloud, const LayerSpec& spec, double pixel_size) {
  spec.validate();
  if (cloud.empty()) throw ConfigError("cannot rasterize an empty cloud");
  const auto geom = RasterGeometry::for_cloud(cloud, pixel_size);
  LayerTruth truth;
  for (auto& layer : truth.layers) layer = TriStateRaster(geom, Cell::NoData);

  auto& gv = truth[Layer::GroundVegetation];
  auto& under = truth[Layer::Understory];
  auto& over = truth[Layer::Overstory];

  // Phase 1: explicit labels.
  Grid<double> unlabeled_max(geom, -1.0);
  for (const auto& p : cloud.points()) {
    const auto [r, c] = geom.pixel_of(p.x, p.y);
    if (!p.label) {
      unlabeled_max.at(r, c) = std::max(unlabeled_max.at(r, c), p.z);
      continue;
    }
    switch (*p.label) {
      case ClassId::Deciduous:
      case ClassId::Coniferous: over.at(r, c) = Cell::Full; break;
      case ClassId::Understory: under.at(r, c) = Cell::Full; break;
      default: break;
    }
  }

  // Phase 2: height of unlabeled points, never overwriting Full cells.
  auto set = [](TriStateRaster& g, int r, int c, Cell v) {
    if (g.at(r, c) != Cell::Full) g.at(r, c) = v;
  };
  for (int r = 0; r < geom.rows; ++r) {
    for (int c = 0; c < geom.cols; ++c) {
      const double h = unlabeled_max.at(r, c);
      if (h < 0.0) continue;  // no unlabeled point in this column
      if (h < spec.gv_low) {
        set(gv, r, c, Cell::Empty);
        set(under, r, c, Cell::Empty);
        set(over, r, c, Cell::Empty);
      } else if (h < spec.gv_high) {
        set(gv, r, c, Cell::Full);
        set(under, r, c, Cell::Empty);
        set(over, r, c, Cell::Empty);
      } else if (h < spec.under_high) {
        set(gv, r, c, Cell::NoData);
        set(under, r, c, Cell::Full);
        set(over, r, c, Cell::Empty);
      } else {
        set(gv, r, c, Cell::NoData);
        set(under, r, c, Cell::NoData);
        set(over, r, c, Cell::Full);
      }
    }
  }
  return truth;
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, const std::filesystem::path& path) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw FormatError(path.string() + ": bad number '" + tok + "'");
  return v;
}

}  // namespace

void write_ascii_grid(const AsciiGrid& grid, const std::filesystem::path& path) {
  grid.geometry.validate();
  if (grid.values.size() != grid.geometry.size()) throw ConfigError("grid value count mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto& g = grid.geometry;
  out << "ncols " << g.cols << '\n'
      << "nrows " << g.rows << '\n'
      << "xllcorner " << format_double(g.origin.x) << '\n'
      << "yllcorner " << format_double(g.origin.y) << '\n'
      << "cellsize " << format_double(g.pixel_size) << '\n'
      << "NODATA_value -9999\n";
  for (int r = g.rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.cols; ++c) {
      if (c) out << ' ';
      out << format_double(grid.at(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

AsciiGrid read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  AsciiGrid grid;
  double nodata = kNoDataValue;
  const char* keys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"};
  double header[6] = {};
  for (int i = 0; i < 6; ++i) {
    std::string key, val;
    if (!(in >> key >> val) || key != keys[i])
      throw FormatError(path.string() + ": expected header key " + keys[i]);
    header[i] = parse_double(val, path);
  }
  nodata = header[5];
  auto& g = grid.geometry;
  g.cols = static_cast<int>(header[0]);
  g.rows = static_cast<int>(header[1]);
  g.origin = {header[2], header[3]};
  g.pixel_size = header[4];
  g.validate();
  grid.values.assign(g.size(), kNoDataValue);
  std::string tok;
  for (int r = g.rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.cols; ++c) {
      if (!(in >> tok)) throw FormatError(path.string() + ": truncated grid body");
      double v = parse_double(tok, path);
      if (v == nodata) v = kNoDataValue;
      grid.values[static_cast<std::size_t>(r) * static_cast<std::size_t>(g.cols) +
                  static_cast<std::size_t>(c)] = v;
    }
  }
  if (in >> tok) throw FormatError(path.string() + ": trailing data after grid body");
  return grid;
}

void write_tri_raster(const TriStateRaster& raster, const std::filesystem::path& path) {
  AsciiGrid grid{raster.geometry(), {}};
  grid.values.reserve(raster.cells().size());
  for (Cell c : raster.cells())
    grid.values.push_back(c == Cell::Full ? 1.0 : c == Cell::Empty ? 0.0 : kNoDataValue);
  write_ascii_grid(grid, path);
}

TriStateRaster read_tri_raster(const std::filesystem::path& path) {
  const auto grid = read_ascii_grid(path);
  TriStateRaster out(grid.geometry, Cell::NoData);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double v = grid.values[i];
    if (v == 1.0) out.cells()[i] = Cell::Full;
    else if (v == 0.0) out.cells()[i] = Cell::Empty;
    else if (v == kNoDataValue) out.cells()[i] = Cell::NoData;
    else throw FormatError(path.string() + ": occupancy value must be 0, 1 or NODATA");
  }
  return out;
}

AsciiGrid to_ascii(const Grid<std::optional<double>>& grid) {
  AsciiGrid out{grid.geometry(), {}};
  out.values.reserve(grid.cells().size());
  for (const auto& v : grid.cells()) out.values.push_back(v ? *v : kNoDataValue);
  return out;
}

Grid<std::optional<double>> from_ascii(const AsciiGrid& grid) {
  Grid<std::optional<double>> out(grid.geometry, std::nullopt);
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    if (grid.values[i] != kNoDataValue) out.cells()[i] = grid.values[i];
  return out;
}

}  // namespace strata
