#include "strata/cylinder.hpp"

#include "strata/error.hpp"

#include <algorithm>
#include <cmath>

namespace strata {

namespace {

void require_radius(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("cylinder radius must be > 0");
}

std::vector<double> axis_positions(double start, double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::vector<Vec2> grid(const PlotCloud& cloud, double step, bool cover) {
  const Vec2 o = cloud.origin();
  const Vec2 e = cloud.extent();
  auto count = [&](double len) -> std::size_t {
    if (cover) return static_cast<std::size_t>(std::ceil(len / step - 1e-9)) + 1;
    return static_cast<std::size_t>(std::floor(len / step + 1e-9)) + 1;
  };
  const auto xs = axis_positions(o.x, step, count(e.x));
  const auto ys = axis_positions(o.y, step, count(e.y));
  std::vector<Vec2> out;
  out.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) out.push_back({x, y});
  return out;
}

}  // namespace

double normalized_intensity(std::uint32_t intensity, double scale) {
  return std::clamp(static_cast<double>(intensity) / scale, 0.0, kIntensityClamp);
}

double normalized_return(std::uint8_t return_number) {
  return std::clamp(static_cast<double>(return_number) / 3.0, 0.0, 1.0);
}

Cylinder extract_cylinder(const PlotCloud& cloud, Vec2 center, double radius) {
  require_radius(radius);
  Cylinder cyl;
  cyl.center = center;
  cyl.radius = radius;
  const double r2 = radius * radius;
  const auto& pts = cloud.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x - center.x;
    const double dy = pts[i].y - center.y;
    if (dx * dx + dy * dy <= r2) cyl.point_indices.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(cyl.point_indices.size());
  cyl.features.resize(m, kFeatureWidth);
  cyl.xy.reserve(cyl.point_indices.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& p = pts[cyl.point_indices[static_cast<std::size_t>(r)]];
    cyl.xy.push_back({p.x, p.y});
    cyl.features(r, kDx) = p.x - center.x;
    cyl.features(r, kDy) = p.y - center.y;
    cyl.features(r, kZ) = p.z;
    cyl.features(r, kIntensity) = normalized_intensity(p.intensity, cloud.intensity_scale());
    cyl.features(r, kReturn) = normalized_return(p.return_number);
  }
  return cyl;
}

std::vector<Vec2> training_grid(const PlotCloud& cloud, double radius) {
  require_radius(radius);
  return grid(cloud, radius / 5.0, false);
}

std::vector<Vec2> inference_grid(const PlotCloud& cloud, double radius) {
  require_radius(radius);
  return grid(cloud, radius, true);
}

}  // namespace strata
