#pragma once

#include "strata/types.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace strata::test {

inline PointRecord pt(double x, double y, double z, Label label = std::nullopt, std::uint32_t intensity = 100,
                      std::uint8_t rn = 1) {
  PointRecord p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.intensity = intensity;
  p.return_number = rn;
  p.label = label;
  return p;
}

/// Uniform random points over [0, w) x [0, h) with random labels (some unlabeled).
inline PlotCloud random_cloud(std::mt19937_64& rng, int n, double w, double h, double zmax = 15.0,
                              bool all_labeled = false) {
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h), uz(0.0, zmax);
  std::uniform_int_distribution<int> ul(all_labeled ? 0 : -1, kNumClasses - 1);
  std::uniform_int_distribution<int> ui(1, 4000), ur(1, 5);
  std::vector<PointRecord> pts;
  for (int i = 0; i < n; ++i)
    pts.push_back(pt(ux(rng), uy(rng), uz(rng), label_from_id(ul(rng)), static_cast<std::uint32_t>(ui(rng)),
                     static_cast<std::uint8_t>(ur(rng))));
  return PlotCloud("rand", {0.0, 0.0}, {w, h}, std::move(pts));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("strata_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace strata::test
