#include "strata/synthgen.hpp"

#include "strata/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace strata {

namespace {

// Exponent of the flat-topped ground-vegetation dome profile.
constexpr double kDomeExponent = 4.0;

double sample(std::mt19937_64& rng, Range r) {
  if (r.hi <= r.lo) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

std::uint32_t draw_intensity(std::mt19937_64& rng, const IntensityModel& m, int return_number) {
  const double v = std::normal_distribution<double>(m.mean, m.sd)(rng) * std::pow(0.7, return_number - 1);
  return static_cast<std::uint32_t>(std::clamp(std::round(v), 0.0, 65535.0));
}

void check_range(Range r, const char* name) {
  if (!(r.lo >= 0.0) || !(r.hi >= r.lo)) throw ConfigError(std::string("invalid range for ") + name);
}

}  // namespace

std::string_view instance_kind_name(InstanceKind k) {
  switch (k) {
    case InstanceKind::Deciduous: return "deciduous";
    case InstanceKind::Coniferous: return "coniferous";
    case InstanceKind::Shrub: return "shrub";
    case InstanceKind::GroundVegetation: return "gv";
    case InstanceKind::Stem: return "stem";
  }
  return "?";
}

ClassId instance_class(InstanceKind k) {
  switch (k) {
    case InstanceKind::Deciduous: return ClassId::Deciduous;
    case InstanceKind::Coniferous: return ClassId::Coniferous;
    case InstanceKind::Shrub: return ClassId::Understory;
    case InstanceKind::GroundVegetation: return ClassId::GroundVegetation;
    case InstanceKind::Stem: return ClassId::Stem;
  }
  return ClassId::Ground;
}

namespace {

// Vertical extent at normalized horizontal distance t in [0, 1] from the axis.
std::pair<double, double> profile(const Instance& in, double t) {
  switch (in.kind) {
    case InstanceKind::Deciduous:
    case InstanceKind::Shrub: {
      const double mid = 0.5 * (in.base + in.top), half = 0.5 * (in.top - in.base) * std::sqrt(std::max(0.0, 1.0 - t * t));
      return {mid - half, mid + half};
    }
    case InstanceKind::Coniferous: return {in.base, in.top - t * (in.top - in.base)};
    case InstanceKind::GroundVegetation:
      return {in.base, in.base + (in.top - in.base) * std::pow(std::max(0.0, 1.0 - std::pow(t, kDomeExponent)),
                                                               1.0 / kDomeExponent)};
    case InstanceKind::Stem: return {in.base, in.top};
  }
  return {in.base, in.top};
}

}  // namespace

std::optional<std::pair<double, double>> Instance::column(double x, double y) const {
  const double d = std::hypot(x - center.x, y - center.y);
  if (d > radius) return std::nullopt;
  return profile(*this, d / radius);
}

bool Instance::contains(double x, double y, double z, double tol) const {
  const double d = std::hypot(x - center.x, y - center.y);
  if (d > radius + tol) return false;
  const auto [lo, hi] = profile(*this, std::min(d, radius) / radius);
  return z >= lo - tol && z <= hi + tol;
}

void SceneConfig::validate() const {
  if (!(extent.x > 0.0) || !(extent.y > 0.0)) throw ConfigError("scene extent must be positive");
  if (!(pulse_density > 0.0) || !(stem_density >= 0.0) || !(ground_jitter >= 0.0))
    throw ConfigError("scene densities must be non-negative");
  if (deciduous < 0 || coniferous < 0 || shrubs < 0 || gv_patches < 0) throw ConfigError("instance counts must be >= 0");
  for (auto [r, n] : {std::pair{tree_top, "tree_top"}, {deciduous_radius, "deciduous_radius"},
                      {deciduous_depth, "deciduous_depth"}, {conifer_radius, "conifer_radius"},
                      {conifer_length, "conifer_length"}, {stem_radius, "stem_radius"}, {shrub_top, "shrub_top"},
                      {shrub_radius, "shrub_radius"}, {shrub_depth, "shrub_depth"}, {gv_top, "gv_top"},
                      {gv_radius, "gv_radius"}})
    check_range(r, n);
  if (tree_top.lo <= 5.0) throw ConfigError("tree tops must exceed 5 m");
  if (shrub_top.lo < 1.5 || shrub_top.hi >= 5.0) throw ConfigError("shrub tops must lie in [1.5, 5) m");
  if (gv_top.lo < 0.5 || gv_top.hi >= 1.5) throw ConfigError("ground vegetation tops must lie in [0.5, 1.5) m");
  if (deciduous_depth.hi >= tree_top.lo || conifer_length.hi >= tree_top.lo)
    throw ConfigError("crowns must not reach the ground");
  if (shrub_depth.hi >= shrub_top.lo) throw ConfigError("shrubs must not reach below the ground");
  for (double p : hit_probability)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("hit probabilities must lie in [0, 1]");
  if (!(occlusion >= 0.0 && occlusion <= 1.0)) throw ConfigError("occlusion must lie in [0, 1]");
  if (max_returns < 1) throw ConfigError("max_returns must be positive");
  for (const auto& m : intensity)
    if (!(m.mean >= 0.0) || !(m.sd >= 0.0)) throw ConfigError("intensity parameters must be non-negative");
}

Scene generate_plot(const SceneConfig& cfg) {
  cfg.validate();
  Scene scene;
  auto& inst = scene.instances;
  std::mt19937_64 layout_rng(derive_seed(cfg.seed, 1));
  auto place = [&] {
    return Vec2{cfg.origin.x + std::uniform_real_distribution<double>(0.0, cfg.extent.x)(layout_rng),
                cfg.origin.y + std::uniform_real_distribution<double>(0.0, cfg.extent.y)(layout_rng)};
  };
  auto add_stem = [&](int crown) {
    Instance s;
    s.kind = InstanceKind::Stem;
    s.center = inst[static_cast<std::size_t>(crown)].center;
    s.radius = sample(layout_rng, cfg.stem_radius);
    s.base = 0.0;
    s.top = inst[static_cast<std::size_t>(crown)].base;
    s.parent = crown;
    inst.push_back(s);
  };
  for (int i = 0; i < cfg.deciduous; ++i) {
    Instance t;
    t.kind = InstanceKind::Deciduous;
    t.center = place();
    t.top = sample(layout_rng, cfg.tree_top);
    t.base = t.top - sample(layout_rng, cfg.deciduous_depth);
    t.radius = sample(layout_rng, cfg.deciduous_radius);
    inst.push_back(t);
    add_stem(static_cast<int>(inst.size()) - 1);
  }
  for (int i = 0; i < cfg.coniferous; ++i) {
    Instance t;
    t.kind = InstanceKind::Coniferous;
    t.center = place();
    t.top = sample(layout_rng, cfg.tree_top);
    t.base = t.top - sample(layout_rng, cfg.conifer_length);
    t.radius = sample(layout_rng, cfg.conifer_radius);
    inst.push_back(t);
    add_stem(static_cast<int>(inst.size()) - 1);
  }
  for (int i = 0; i < cfg.shrubs; ++i) {
    Instance s;
    s.kind = InstanceKind::Shrub;
    s.center = place();
    s.top = sample(layout_rng, cfg.shrub_top);
    s.base = s.top - sample(layout_rng, cfg.shrub_depth);
    s.radius = sample(layout_rng, cfg.shrub_radius);
    inst.push_back(s);
  }
  for (int i = 0; i < cfg.gv_patches; ++i) {
    Instance g;
    g.kind = InstanceKind::GroundVegetation;
    g.center = place();
    g.base = 0.0;
    g.top = sample(layout_rng, cfg.gv_top);
    g.radius = sample(layout_rng, cfg.gv_radius);
    inst.push_back(g);
  }

  std::vector<PointRecord> pts;
  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto emit = [&](double x, double y, double z, ClassId c, int rn) {
    PointRecord p;
    p.x = x;
    p.y = y;
    p.z = std::max(0.0, z);
    p.return_number = static_cast<std::uint8_t>(std::min(rn, 255));
    p.intensity = draw_intensity(rng, cfg.intensity[static_cast<std::size_t>(class_index(c))], rn);
    p.label = c;
    pts.push_back(p);
  };

  // Vertical pulses, top-down through every solid they cross, ending on the ground.
  const double area = cfg.extent.x * cfg.extent.y;
  const auto pulses = std::poisson_distribution<long>(cfg.pulse_density * area)(rng);
  struct Hit {
    double zt, zb;
    std::size_t inst;
  };
  std::vector<Hit> hits;
  for (long k = 0; k < pulses; ++k) {
    const double x = cfg.origin.x + unit(rng) * cfg.extent.x;
    const double y = cfg.origin.y + unit(rng) * cfg.extent.y;
    hits.clear();
    for (std::size_t i = 0; i < inst.size(); ++i)
      if (const auto col = inst[i].column(x, y)) hits.push_back({col->second, col->first, i});
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.zt > b.zt || (a.zt == b.zt && a.inst < b.inst); });
    int rn = 0;
    bool alive = true;
    for (const auto& h : hits) {
      const auto& in = inst[h.inst];
      if (unit(rng) >= cfg.hit_probability[static_cast<std::size_t>(in.kind)]) continue;
      const double u = unit(rng);
      emit(x, y, h.zt - (h.zt - h.zb) * u * u, instance_class(in.kind), ++rn);
      if (rn >= cfg.max_returns || unit(rng) >= cfg.occlusion) {
        alive = false;
        break;
      }
    }
    if (alive) emit(x, y, unit(rng) * cfg.ground_jitter, ClassId::Ground, rn + 1);
  }

  // Lateral stem returns from pulses grazing the trunk below the crown.
  for (const auto& s : inst) {
    if (s.kind != InstanceKind::Stem) continue;
    const double lateral = 2.0 * std::numbers::pi * s.radius * (s.top - s.base);
    const auto n = std::poisson_distribution<long>(cfg.stem_density * lateral)(rng);
    for (long k = 0; k < n; ++k) {
      const double a = unit(rng) * 2.0 * std::numbers::pi;
      const double x = s.center.x + s.radius * std::cos(a);
      const double y = s.center.y + s.radius * std::sin(a);
      const double z = s.base + unit(rng) * (s.top - s.base);
      const int rn = 2 + static_cast<int>(unit(rng) * 2.0);
      if (x < cfg.origin.x || y < cfg.origin.y || x > cfg.origin.x + cfg.extent.x || y > cfg.origin.y + cfg.extent.y)
        continue;
      emit(x, y, z, ClassId::Stem, rn);
    }
  }
  scene.cloud = PlotCloud(cfg.plot_id, cfg.origin, cfg.extent, std::move(pts));
  return scene;
}

PlotCloud simulate_annotation(const PlotCloud& full, const AnnotationConfig& cfg) {
  if (!(cfg.ground_unlabeled_fraction >= 0.0 && cfg.ground_unlabeled_fraction <= 1.0))
    throw ConfigError("ground_unlabeled_fraction must lie in [0, 1]");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Label> labels = full.labels();
  for (auto& l : labels) {
    if (!l) continue;
    if (*l == ClassId::GroundVegetation && cfg.hide_ground_vegetation) l.reset();
    else if (*l == ClassId::Ground && unit(rng) < cfg.ground_unlabeled_fraction) l.reset();
  }
  return full.with_labels(labels);
}

void write_scene_manifest(const SceneConfig& cfg, const Scene& scene, const std::filesystem::path& path) {
  nlohmann::json j;
  j["plot_id"] = cfg.plot_id;
  j["origin"] = {cfg.origin.x, cfg.origin.y};
  j["extent"] = {cfg.extent.x, cfg.extent.y};
  j["seed"] = cfg.seed;
  j["pulse_density"] = cfg.pulse_density;
  j["points"] = scene.cloud.size();
  auto& arr = j["instances"] = nlohmann::json::array();
  for (const auto& in : scene.instances)
    arr.push_back({{"kind", instance_kind_name(in.kind)},
                   {"center", {in.center.x, in.center.y}},
                   {"radius", in.radius},
                   {"base", in.base},
                   {"top", in.top},
                   {"parent", in.parent}});
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
}

std::vector<Instance> read_scene_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<Instance> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& r : j.at("instances")) {
      Instance i;
      const auto kind = r.at("kind").get<std::string>();
      bool found = false;
      for (auto k : {InstanceKind::Deciduous, InstanceKind::Coniferous, InstanceKind::Shrub,
                     InstanceKind::GroundVegetation, InstanceKind::Stem})
        if (instance_kind_name(k) == kind) {
          i.kind = k;
          found = true;
        }
      if (!found) throw FormatError(path.string() + ": unknown instance kind '" + kind + "'");
      i.center = {r.at("center").at(0).get<double>(), r.at("center").at(1).get<double>()};
      i.radius = r.at("radius").get<double>();
      i.base = r.at("base").get<double>();
      i.top = r.at("top").get<double>();
      i.parent = r.at("parent").get<int>();
      out.push_back(i);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace strata
