#include "strata/metrics.hpp"

#include "strata/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace strata {

namespace {

std::optional<double> percent(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(const std::optional<double>& v, int prec = 1) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, *v);
  return buf;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

ConfusionMatrix<kNumClasses> confusion_3d(std::span<const ClassId> pred, std::span<const Label> truth) {
  if (pred.size() != truth.size()) throw ConfigError("eval_3d: prediction and truth lengths differ");
  ConfusionMatrix<kNumClasses> cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!truth[i] || *truth[i] == ClassId::GroundVegetation) continue;
    ++cm.counts[static_cast<std::size_t>(class_index(*truth[i]))][static_cast<std::size_t>(class_index(pred[i]))];
  }
  return cm;
}

Report3d report_3d(const ConfusionMatrix<kNumClasses>& cm) {
  Report3d r;
  r.confusion = cm;
  std::uint64_t diag = 0;
  std::vector<double> ious;
  for (ClassId c : kEvaluated3d) {
    const auto k = static_cast<std::size_t>(class_index(c));
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row += cm.counts[k][j];
      col += cm.counts[j][k];
    }
    const std::uint64_t tp = cm.counts[k][k];
    diag += tp;
    const std::uint64_t uni = row + col - tp;
    r.iou[k] = percent(tp, uni);
    if (r.iou[k]) ious.push_back(*r.iou[k]);
    else r.warnings.push_back("class " + std::string(class_name(c)) + " absent from truth and prediction");
  }
  r.miou = mean(ious);
  r.oa = percent(diag, cm.total());
  return r;
}

Report3d eval_3d(std::span<const ClassId> pred, std::span<const Label> truth) {
  return report_3d(confusion_3d(pred, truth));
}

std::array<ConfusionMatrix<2>, 3> confusion_2d(const std::array<Grid<std::uint8_t>, 3>& pred,
                                               const LayerTruth& truth) {
  std::array<ConfusionMatrix<2>, 3> cms{};
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& t = truth.layers[l];
    if (!(pred[l].geometry() == t.geometry())) throw ConfigError("eval_2d: raster geometries differ");
    for (int r = 0; r < t.rows(); ++r) {
      for (int c = 0; c < t.cols(); ++c) {
        const Cell cell = t.at(r, c);
        if (cell == Cell::NoData) continue;
        ++cms[l].counts[cell == Cell::Full ? 1 : 0][pred[l].at(r, c) ? 1 : 0];
      }
    }
  }
  return cms;
}

Report2d report_2d(const std::array<ConfusionMatrix<2>, 3>& cms) {
  Report2d r;
  r.confusion = cms;
  std::uint64_t correct = 0, total = 0;
  std::vector<double> ious;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& m = cms[l].counts;
    r.iou[l] = percent(m[1][1], m[1][1] + m[0][1] + m[1][0]);
    if (r.iou[l]) ious.push_back(*r.iou[l]);
    correct += m[0][0] + m[1][1];
    total += cms[l].total();
  }
  r.miou = mean(ious);
  r.oa = percent(correct, total);
  return r;
}

Report2d eval_2d(const std::array<Grid<std::uint8_t>, 3>& pred, const LayerTruth& truth) {
  return report_2d(confusion_2d(pred, truth));
}

std::string_view height_target_name(HeightTarget t) {
  switch (t) {
    case HeightTarget::GvTop: return "gv_top";
    case HeightTarget::UnderstoryTop: return "understory_top";
    case HeightTarget::OverstoryBase: return "overstory_base";
    case HeightTarget::OverstoryTop: return "overstory_top";
  }
  return "?";
}

void HeightAccumulator::add(double pred, double truth) {
  const double e = std::abs(pred - truth);
  abs_sum += e;
  ++count;
  if (truth >= kMreMinHeight) {
    rel_sum += e / truth;
    ++rel_count;
  }
}

HeightAccumulator& HeightAccumulator::operator+=(const HeightAccumulator& o) {
  abs_sum += o.abs_sum;
  count += o.count;
  rel_sum += o.rel_sum;
  rel_count += o.rel_count;
  return *this;
}

std::optional<double> HeightAccumulator::mae() const {
  if (count == 0) return std::nullopt;
  return abs_sum / static_cast<double>(count);
}

std::optional<double> HeightAccumulator::mre() const {
  if (rel_count == 0) return std::nullopt;
  return 100.0 * rel_sum / static_cast<double>(rel_count);
}

HeightAccumulator height_errors(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ConfigError("height_errors: lengths differ");
  HeightAccumulator a;
  for (std::size_t i = 0; i < pred.size(); ++i) a.add(pred[i], truth[i]);
  return a;
}

HeightReport eval_heights(const LayerProduct& pred, const LayerProduct& truth) {
  if (!(pred.geometry == truth.geometry)) throw ConfigError("eval_heights: raster geometries differ");
  HeightReport rep;
  struct Target {
    HeightTarget t;
    Layer layer;
    bool top;
  };
  const Target targets[] = {{HeightTarget::GvTop, Layer::GroundVegetation, true},
                            {HeightTarget::UnderstoryTop, Layer::Understory, true},
                            {HeightTarget::OverstoryBase, Layer::Overstory, false},
                            {HeightTarget::OverstoryTop, Layer::Overstory, true}};
  for (const auto& tg : targets) {
    const auto& p = pred[tg.layer];
    const auto& t = truth[tg.layer];
    auto& acc = rep.acc[static_cast<std::size_t>(tg.t)];
    for (int r = 0; r < pred.geometry.rows; ++r) {
      for (int c = 0; c < pred.geometry.cols; ++c) {
        if (!p.occupied.at(r, c) || !t.occupied.at(r, c)) continue;
        if (tg.top) acc.add(p.hmax.at(r, c), t.hmax.at(r, c));
        else acc.add(p.hmin.at(r, c), t.hmin.at(r, c));
      }
    }
  }
  return rep;
}

void print_report(std::ostream& out, const Report3d& r3, const Report2d& r2, const HeightReport& h) {
  char line[160];
  out << "3D segmentation\n";
  for (ClassId c : kEvaluated3d) {
    std::snprintf(line, sizeof(line), "  %-14s IoU %7s\n", std::string(class_name(c)).c_str(),
                  fmt(r3.iou[static_cast<std::size_t>(class_index(c))]).c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "  %-14s     %7s\n  %-14s     %7s\n", "mIoU", fmt(r3.miou).c_str(), "OA",
                fmt(r3.oa).c_str());
  out << line;
  out << "2D occupancy\n";
  for (Layer l : kLayers) {
    std::snprintf(line, sizeof(line), "  %-14s IoU %7s\n", std::string(layer_name(l)).c_str(),
                  fmt(r2.iou[static_cast<std::size_t>(layer_index(l))]).c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "  %-14s     %7s\n  %-14s     %7s\n", "mIoU", fmt(r2.miou).c_str(), "OA",
                fmt(r2.oa).c_str());
  out << line;
  out << "Heights\n";
  std::snprintf(line, sizeof(line), "  %-16s %8s %8s\n", "target", "MAE(m)", "MRE(%)");
  out << line;
  for (HeightTarget t : kHeightTargets) {
    std::snprintf(line, sizeof(line), "  %-16s %8s %8s\n", std::string(height_target_name(t)).c_str(),
                  fmt(h.mae(t), 3).c_str(), fmt(h.mre(t)).c_str());
    out << line;
  }
}

void write_report_jsonl(std::ostream& out, const Report3d& r3, const Report2d& r2, const HeightReport& h) {
  auto rec = [&out](const std::string& name, const std::optional<double>& v) {
    out << nlohmann::json{{"metric", name}, {"value", opt(v)}}.dump() << '\n';
  };
  for (ClassId c : kEvaluated3d)
    rec("iou3d_" + std::string(class_name(c)), r3.iou[static_cast<std::size_t>(class_index(c))]);
  rec("miou3d", r3.miou);
  rec("oa3d", r3.oa);
  for (Layer l : kLayers) rec("iou2d_" + std::string(layer_name(l)), r2.iou[static_cast<std::size_t>(layer_index(l))]);
  rec("miou2d", r2.miou);
  rec("oa2d", r2.oa);
  for (HeightTarget t : kHeightTargets) {
    rec("mae_" + std::string(height_target_name(t)), h.mae(t));
    rec("mre_" + std::string(height_target_name(t)), h.mre(t));
  }
}

}  // namespace strata
