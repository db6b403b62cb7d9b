#include "strata/types.hpp"

#include "strata/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strata {

std::string_view class_name(ClassId c) {
  switch (c) {
    case ClassId::Ground: return "ground";
    case ClassId::GroundVegetation: return "ground_vegetation";
    case ClassId::Understory: return "understory";
    case ClassId::Stem: return "stem";
    case ClassId::Deciduous: return "deciduous";
    case ClassId::Coniferous: return "coniferous";
  }
  return "?";
}

Label label_from_id(int id) {
  if (id == kUnlabeledId) return std::nullopt;
  if (id < 0 || id >= kNumClasses) throw ConfigError("label id out of range: " + std::to_string(id));
  return static_cast<ClassId>(id);
}

std::string_view layer_name(Layer l) {
  switch (l) {
    case Layer::GroundVegetation: return "gv";
    case Layer::Understory: return "understory";
    case Layer::Overstory: return "overstory";
  }
  return "?";
}

std::optional<Layer> layer_of(ClassId c) {
  switch (c) {
    case ClassId::GroundVegetation: return Layer::GroundVegetation;
    case ClassId::Understory: return Layer::Understory;
    case ClassId::Deciduous:
    case ClassId::Coniferous: return Layer::Overstory;
    default: return std::nullopt;
  }
}

void LayerSpec::validate() const {
  if (!(gv_low > 0.0 && gv_low < gv_high && gv_high < under_high))
    throw ConfigError("layer thresholds must satisfy 0 < gv_low < gv_high < under_high");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

PlotCloud::PlotCloud(std::string plot_id, Vec2 origin, Vec2 extent, std::vector<PointRecord> points)
    : plot_id_(std::move(plot_id)), origin_(origin), extent_(extent), points_(std::move(points)) {
  if (!(extent_.x >= 0.0 && extent_.y >= 0.0))
    throw ConfigError("plot extent must be non-negative");
  const double x1 = origin_.x + extent_.x;
  const double y1 = origin_.y + extent_.y;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw ConfigError("non-finite coordinate at point " + std::to_string(i));
    if (p.z < 0.0) throw ConfigError("negative elevation at point " + std::to_string(i));
    if (p.return_number < 1) throw ConfigError("return number < 1 at point " + std::to_string(i));
    if (p.x < origin_.x || p.x > x1 || p.y < origin_.y || p.y > y1)
      throw ConfigError("point " + std::to_string(i) + " outside plot footprint");
  }
  if (!points_.empty()) {
    std::vector<double> intensities;
    intensities.reserve(points_.size());
    for (const auto& p : points_) intensities.push_back(static_cast<double>(p.intensity));
    const double p95 = percentile(std::move(intensities), 95.0);
    intensity_scale_ = p95 > 0.0 ? p95 : 1.0;
  }
}

PlotCloud PlotCloud::from_points(std::string plot_id, std::vector<PointRecord> points) {
  if (points.empty()) return PlotCloud(std::move(plot_id), {}, {}, {});
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  return PlotCloud(std::move(plot_id), {x0, y0}, {x1 - x0, y1 - y0}, std::move(points));
}

PlotCloud PlotCloud::with_labels(const std::vector<Label>& labels) const {
  if (labels.size() != points_.size()) throw ConfigError("label count does not match point count");
  auto pts = points_;
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].label = labels[i];
  PlotCloud out;
  out.plot_id_ = plot_id_;
  out.origin_ = origin_;
  out.extent_ = extent_;
  out.points_ = std::move(pts);
  out.intensity_scale_ = intensity_scale_;
  return out;
}

std::vector<Label> PlotCloud::labels() const {
  std::vector<Label> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.label);
  return out;
}

}  // namespace strata
