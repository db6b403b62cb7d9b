#include "strata/losses.hpp"

#include "strata/cylinder.hpp"
#include "strata/error.hpp"

#include <cmath>

namespace strata {

namespace {

constexpr int kGV = class_index(ClassId::GroundVegetation);
constexpr int kUnder = class_index(ClassId::Understory);
constexpr int kDecid = class_index(ClassId::Deciduous);
constexpr int kConif = class_index(ClassId::Coniferous);

void require_probs(const RowMatrix& probs, std::size_t n) {
  if (probs.cols() != kNumClasses) throw ConfigError("probabilities must have 6 columns");
  if (static_cast<std::size_t>(probs.rows()) != n) throw ConfigError("probability rows do not match inputs");
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_2d >= 0.0) || !(mu_elev >= 0.0)) throw ConfigError("loss weights must be non-negative");
}

LossTerm loss_3d(const RowMatrix& probs, std::span<const Label> labels, const Loss3dOptions& opts) {
  require_probs(probs, labels.size());
  LossTerm out{0.0, RowMatrix::Zero(probs.rows(), probs.cols())};
  std::size_t count = 0;
  for (const auto& l : labels)
    if (l && (opts.supervise_gv || *l != ClassId::GroundVegetation)) ++count;
  if (count == 0) return out;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (!l || (!opts.supervise_gv && *l == ClassId::GroundVegetation)) continue;
    const int c = class_index(*l);
    const auto r = static_cast<Eigen::Index>(i);
    const double w = opts.class_weights[static_cast<std::size_t>(c)];
    const double p = probs(r, c);
    out.value += -w * std::log(std::max(p, kLogClamp)) * inv;
    if (p > kLogClamp) out.grad(r, c) = -w * inv / p;
  }
  return out;
}

SoftOccupancy project_soft_cells(const RowMatrix& probs, std::span<const std::pair<int, int>> cells,
                                 const RasterGeometry& geometry) {
  require_probs(probs, cells.size());
  SoftOccupancy occ;
  occ.geometry = geometry;
  for (std::size_t l = 0; l < 3; ++l) {
    occ.occupancy[l] = Grid<double>(geometry, 0.0);
    occ.argmax[l] = Grid<int>(geometry, -1);
  }
  occ.valid = Grid<std::uint8_t>(geometry, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [r, c] = cells[i];
    if (r < 0 || c < 0 || r >= geometry.rows || c >= geometry.cols)
      throw InternalError("project_soft: cell outside the raster");
    const auto row = static_cast<Eigen::Index>(i);
    const double v[3] = {probs(row, kGV), probs(row, kUnder), probs(row, kDecid) + probs(row, kConif)};
    const bool first = !occ.valid.at(r, c);
    occ.valid.at(r, c) = 1;
    for (std::size_t l = 0; l < 3; ++l) {
      if (first || v[l] > occ.occupancy[l].at(r, c)) {
        occ.occupancy[l].at(r, c) = v[l];
        occ.argmax[l].at(r, c) = static_cast<int>(i);
      }
    }
  }
  return occ;
}

SoftOccupancy project_soft(const RowMatrix& probs, std::span<const Vec2> xy, const RasterGeometry& geometry) {
  std::vector<std::pair<int, int>> cells;
  cells.reserve(xy.size());
  for (const auto& p : xy) cells.push_back(geometry.pixel_of(p.x, p.y));
  return project_soft_cells(probs, cells, geometry);
}

SoftOccupancy project_soft(const RowMatrix& probs, const Cylinder& cylinder, const RasterGeometry& geometry) {
  return project_soft(probs, std::span<const Vec2>(cylinder.xy), geometry);
}

void restrict_to_disk(SoftOccupancy& occ, Vec2 center, double radius) {
  const double r2 = radius * radius;
  for (int r = 0; r < occ.geometry.rows; ++r) {
    for (int c = 0; c < occ.geometry.cols; ++c) {
      const Vec2 p = occ.geometry.pixel_center(r, c);
      const double dx = p.x - center.x, dy = p.y - center.y;
      if (dx * dx + dy * dy > r2) occ.valid.at(r, c) = 0;
    }
  }
}

Loss2d loss_2d(const SoftOccupancy& pred, const LayerTruth& truth) {
  if (!(pred.geometry == truth.geometry())) throw ConfigError("loss_2d: raster geometries differ");
  Loss2d out;
  for (std::size_t l = 0; l < 3; ++l) out.grad[l] = Grid<double>(pred.geometry, 0.0);
  const auto& g = pred.geometry;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& t = truth.layers[l];
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c)
        if (pred.valid.at(r, c) && t.at(r, c) != Cell::NoData) ++out.pixels;
  }
  if (out.pixels == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.pixels);
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& t = truth.layers[l];
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < g.cols; ++c) {
        const Cell cell = t.at(r, c);
        if (!pred.valid.at(r, c) || cell == Cell::NoData) continue;
        const double o = pred.occupancy[l].at(r, c);
        const double oc = std::clamp(o, kBceClamp, 1.0 - kBceClamp);
        const bool full = cell == Cell::Full;
        out.value += -(full ? std::log(oc) : std::log1p(-oc)) * inv;
        if (o > kBceClamp && o < 1.0 - kBceClamp)
          out.grad[l].at(r, c) = (full ? -1.0 / oc : 1.0 / (1.0 - oc)) * inv;
      }
    }
  }
  return out;
}

RowMatrix project_soft_backward(const SoftOccupancy& occ, const std::array<Grid<double>, 3>& occ_grad,
                                Eigen::Index num_points) {
  RowMatrix out = RowMatrix::Zero(num_points, kNumClasses);
  const auto& g = occ.geometry;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      for (std::size_t l = 0; l < 3; ++l) {
        const int k = occ.argmax[l].at(r, c);
        const double d = occ_grad[l].at(r, c);
        if (k < 0 || d == 0.0) continue;
        if (l == 0) out(k, kGV) += d;
        else if (l == 1) out(k, kUnder) += d;
        else {
          out(k, kDecid) += d;
          out(k, kConif) += d;
        }
      }
    }
  }
  return out;
}

LossTerm loss_elevation(const RowMatrix& probs, std::span<const double> z, const GammaMixture& mixture) {
  if (!mixture.fitted) throw ConfigError("loss_elevation requires a fitted mixture");
  require_probs(probs, z.size());
  LossTerm out{0.0, RowMatrix::Zero(probs.rows(), probs.cols())};
  if (z.empty()) return out;
  const double inv = 1.0 / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double zf = std::max(z[i], kElevationFloor);
    const double gl = std::exp(gamma_log_pdf(zf, mixture.lower.shape, mixture.lower.scale));
    const double gh = std::exp(gamma_log_pdf(zf, mixture.higher.shape, mixture.higher.scale));
    const double low = probs(r, class_index(ClassId::Ground)) + probs(r, kGV);
    const double high = probs(r, kUnder) + probs(r, class_index(ClassId::Stem)) + probs(r, kDecid) + probs(r, kConif);
    const double a = low * gl + high * gh;
    out.value += -std::log(std::max(a, kLogClamp)) * inv;
    if (a > kLogClamp) {
      const double dl = -inv * gl / a;
      const double dh = -inv * gh / a;
      out.grad(r, class_index(ClassId::Ground)) = dl;
      out.grad(r, kGV) = dl;
      out.grad(r, kUnder) = dh;
      out.grad(r, class_index(ClassId::Stem)) = dh;
      out.grad(r, kDecid) = dh;
      out.grad(r, kConif) = dh;
    }
  }
  return out;
}

double total_loss(double l3d, double l2d, double lelev, const LossWeights& w) {
  return l3d + w.lambda_2d * l2d + w.mu_elev * lelev;
}

}  // namespace strata
