#pragma once

#include "strata/mesh.hpp"
#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace strata {

/// Counts with rows = truth, cols = prediction.
template <int N>
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, N>, N> counts{};

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& r : counts)
      for (auto v : r) t += v;
    return t;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) counts[i][j] += o.counts[i][j];
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Classes scored in 3D (ground vegetation carries no 3D annotation).
inline constexpr std::array<ClassId, 5> kEvaluated3d = {ClassId::Ground, ClassId::Understory, ClassId::Stem,
                                                        ClassId::Deciduous, ClassId::Coniferous};

/// Percentages; an IoU is nullopt when the class is absent from truth and prediction.
struct Report3d {
  ConfusionMatrix<kNumClasses> confusion;
  std::array<std::optional<double>, kNumClasses> iou;  // indexed by class id; GV always nullopt
  std::optional<double> miou;
  std::optional<double> oa;
  std::vector<std::string> warnings;
};

Report3d eval_3d(std::span<const ClassId> pred, std::span<const Label> truth);
Report3d report_3d(const ConfusionMatrix<kNumClasses>& confusion);
/// Accumulates the 3D confusion without computing scores.
ConfusionMatrix<kNumClasses> confusion_3d(std::span<const ClassId> pred, std::span<const Label> truth);

struct Report2d {
  std::array<ConfusionMatrix<2>, 3> confusion;  // per layer, 0 = Empty, 1 = Full
  std::array<std::optional<double>, 3> iou;
  std::optional<double> miou;
  std::optional<double> oa;
};

/// `pred` holds one binary occupancy grid per layer (nonzero = Full).
Report2d eval_2d(const std::array<Grid<std::uint8_t>, 3>& pred, const LayerTruth& truth);
Report2d report_2d(const std::array<ConfusionMatrix<2>, 3>& confusion);
std::array<ConfusionMatrix<2>, 3> confusion_2d(const std::array<Grid<std::uint8_t>, 3>& pred,
                                               const LayerTruth& truth);

/// Height targets compared between products.
enum class HeightTarget { GvTop = 0, UnderstoryTop = 1, OverstoryBase = 2, OverstoryTop = 3 };
inline constexpr std::array<HeightTarget, 4> kHeightTargets = {HeightTarget::GvTop, HeightTarget::UnderstoryTop,
                                                               HeightTarget::OverstoryBase,
                                                               HeightTarget::OverstoryTop};
std::string_view height_target_name(HeightTarget t);

inline constexpr double kMreMinHeight = 0.05;

/// Running sums for one height target.
struct HeightAccumulator {
  double abs_sum = 0.0;
  std::uint64_t count = 0;
  double rel_sum = 0.0;
  std::uint64_t rel_count = 0;

  void add(double pred, double truth);
  HeightAccumulator& operator+=(const HeightAccumulator& o);
  std::optional<double> mae() const;
  std::optional<double> mre() const;  // percent
};

struct HeightReport {
  std::array<HeightAccumulator, 4> acc;
  std::optional<double> mae(HeightTarget t) const { return acc[static_cast<std::size_t>(t)].mae(); }
  std::optional<double> mre(HeightTarget t) const { return acc[static_cast<std::size_t>(t)].mre(); }
};

/// Compares heights on pixels occupied in both products for the target's layer.
HeightReport eval_heights(const LayerProduct& pred, const LayerProduct& truth);

/// Scalar MAE/MRE over paired values (MRE skips truths below kMreMinHeight).
HeightAccumulator height_errors(std::span<const double> pred, std::span<const double> truth);

/// Published full-dataset scores of the reference method, for optional full-data runs.
namespace reference {
inline constexpr double kOa3d = 90.5;
inline constexpr double kMiou3d = 53.5;
inline constexpr double kIouGround = 95.1, kIouUnderstory = 43.3, kIouDeciduous = 90.0, kIouConiferous = 23.5,
                        kIouStem = 15.5;
inline constexpr double kIouGv2d = 81.5, kIouUnderstory2d = 61.0, kIouOverstory2d = 99.3, kMiou2d = 80.6,
                        kOa2d = 92.3;
inline constexpr std::array<double, 4> kMae = {0.03, 0.3, 1.1, 0.1};
inline constexpr std::array<double, 4> kMre = {2.9, 22.0, 26.5, 0.7};
}  // namespace reference

/// Aligned human-readable tables.
void print_report(std::ostream& out, const Report3d& r3, const Report2d& r2, const HeightReport& h);
/// One JSON object per line: {"metric": ..., "value": ...}.
void write_report_jsonl(std::ostream& out, const Report3d& r3, const Report2d& r2, const HeightReport& h);

}  // namespace strata
