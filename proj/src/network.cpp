#include "strata/network.hpp"

#include "strata/autodiff.hpp"
#include "strata/error.hpp"
#include "strata/point_ops.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace strata {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'R', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::vector<ParamBlock> make_layout() {
  const std::vector<std::pair<std::string, std::pair<int, int>>> layers = {
      {"sa1.0", {kFeatureWidth + 3, 32}}, {"sa1.1", {32, 32}},
      {"sa2.0", {32 + 3, 64}},            {"sa2.1", {64, 64}},
      {"fp2.0", {64 + 32, 64}},           {"fp2.1", {64, 32}},
      {"fp1.0", {32 + kFeatureWidth, 32}}, {"fp1.1", {32, 32}},
      {"head", {32, kNumClasses}},
  };
  std::vector<ParamBlock> out;
  std::size_t offset = 0;
  for (const auto& [name, shape] : layers) {
    out.push_back({name + ".weight", offset, shape.first, shape.second});
    offset += out.back().size();
    out.push_back({name + ".bias", offset, 1, shape.second});
    offset += out.back().size();
  }
  return out;
}

// Positions of subsampled points are their (dx, dy, z) feature columns.
RowMatrix positions(const RowMatrix& features) { return features.leftCols(3); }

RowMatrix gather(const RowMatrix& m, std::span<const int> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<int> flatten(const Eigen::MatrixXi& m) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

// Offsets of grouped neighbors from their centroid, one row per (centroid, slot).
RowMatrix relative_positions(const RowMatrix& pos, const RowMatrix& centroids, const Eigen::MatrixXi& nbr) {
  RowMatrix out(nbr.rows() * nbr.cols(), 3);
  for (Eigen::Index i = 0; i < nbr.rows(); ++i)
    for (Eigen::Index j = 0; j < nbr.cols(); ++j)
      out.row(i * nbr.cols() + j) = pos.row(nbr(i, j)) - centroids.row(i);
  return out;
}

struct Graph {
  ad::Var probs;         // M x 6 at full resolution
  std::vector<int> subsample;
};

class Net {
 public:
  Net(ad::Tape& tape, const NetParams& params, bool trainable) : t_(tape) {
    const auto& layout = net_layout();
    for (std::size_t i = 0; i < layout.size(); ++i)
      vars_.push_back(trainable ? t_.leaf(params.block(i)) : t_.constant(params.block(i)));
  }

  const std::vector<ad::Var>& vars() const { return vars_; }

  Graph run(const Cylinder& cyl, int S, std::uint64_t seed) {
    if (S < kMinSubsample) throw ConfigError("subsample size must be at least 8");
    if (cyl.empty()) throw ConfigError("cannot run the network on an empty cylinder");
    Graph g;
    g.subsample = subsample_indices(cyl.size(), static_cast<std::size_t>(S), seed);
    const RowMatrix x = gather(cyl.features, g.subsample);
    const RowMatrix pos = positions(x);

    // SA1
    const int n1 = std::min(kSa1Centroids, S);
    const auto c1 = farthest_point_sample(pos, n1);
    const RowMatrix pos1 = gather(pos, c1);
    const auto nbr1 = ball_query(pos, pos1, kSa1Radius, kGroupSize);
    const auto flat1 = flatten(nbr1);
    RowMatrix in1(static_cast<Eigen::Index>(flat1.size()), kFeatureWidth + 3);
    in1.leftCols(kFeatureWidth) = gather(x, flat1);
    in1.rightCols(3) = relative_positions(pos, pos1, nbr1);
    const ad::Var f1 = t_.group_max(mlp(t_.constant(std::move(in1)), 0), kGroupSize);

    // SA2
    const int n2 = std::min(kSa2Centroids, static_cast<int>(pos1.rows()));
    const auto c2 = farthest_point_sample(pos1, n2);
    const RowMatrix pos2 = gather(pos1, c2);
    const auto nbr2 = ball_query(pos1, pos2, kSa2Radius, kGroupSize);
    const ad::Var grouped = t_.concat_cols(t_.gather_rows(f1, flatten(nbr2)),
                                           t_.constant(relative_positions(pos1, pos2, nbr2)));
    const ad::Var f2 = t_.group_max(mlp(grouped, 2), kGroupSize);

    // FP2: centroids of SA2 back to SA1.
    auto ip2 = inverse_distance_weights(pos2, pos1, kInterpNeighbors);
    const ad::Var up2 = t_.weighted_gather(f2, std::move(ip2.index), std::move(ip2.weights));
    const ad::Var g1 = mlp(t_.concat_cols(up2, f1), 4);

    // FP1: SA1 centroids back to the subsample.
    auto ip1 = inverse_distance_weights(pos1, pos, kInterpNeighbors);
    const ad::Var up1 = t_.weighted_gather(g1, std::move(ip1.index), std::move(ip1.weights));
    const ad::Var h = mlp(t_.concat_cols(up1, t_.constant(x)), 6);

    const ad::Var logits = t_.affine(h, vars_[16], vars_[17]);
    const ad::Var p = t_.softmax_rows(logits);
    g.probs = t_.gather_rows(p, nearest_indices(pos, positions(cyl.features)));
    return g;
  }

 private:
  // Two affine+ReLU layers starting at parameter block pair `layer`.
  ad::Var mlp(ad::Var x, std::size_t layer) {
    const std::size_t b = layer * 2;
    x = t_.relu(t_.affine(x, vars_[b], vars_[b + 1]));
    return t_.relu(t_.affine(x, vars_[b + 2], vars_[b + 3]));
  }

  ad::Tape& t_;
  std::vector<ad::Var> vars_;
};

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& ctx) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError(ctx + ": truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss term: ") + term);
}

}  // namespace

const std::vector<ParamBlock>& net_layout() {
  static const std::vector<ParamBlock> layout = make_layout();
  return layout;
}

std::size_t param_count() {
  const auto& l = net_layout();
  return l.back().offset + l.back().size();
}

RowMatrix NetParams::block(std::size_t i) const {
  const auto& b = net_layout().at(i);
  if (values.size() != param_count()) throw ConfigError("parameter vector has the wrong length");
  return Eigen::Map<const RowMatrix>(values.data() + b.offset, b.rows, b.cols);
}

NetParams init_params(std::uint64_t seed) {
  NetParams p;
  p.seed = seed;
  p.values.assign(param_count(), 0.0);
  std::mt19937_64 rng(seed);
  for (const auto& b : net_layout()) {
    if (b.rows == 1) continue;  // bias
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / b.rows));
    for (std::size_t k = 0; k < b.size(); ++k) p.values[b.offset + k] = dist(rng);
  }
  return p;
}

void save_params(const NetParams& params, const std::filesystem::path& path) {
  if (params.values.size() != param_count()) throw ConfigError("parameter vector has the wrong length");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, params.seed);
  const auto& layout = net_layout();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& b : layout) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put<std::uint64_t>(out, b.offset);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.cols));
  }
  put<std::uint64_t>(out, params.values.size());
  for (double v : params.values) put<double>(out, v);
  if (!out) throw FormatError("failed writing " + path.string());
}

NetParams load_params(const std::filesystem::path& path) {
  const std::string ctx = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + ctx);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(ctx + ": not a checkpoint (bad magic)");
  if (const auto v = get<std::uint32_t>(in, ctx); v != kVersion)
    throw FormatError(ctx + ": unsupported checkpoint version " + std::to_string(v));
  NetParams p;
  p.seed = get<std::uint64_t>(in, ctx);
  const auto& layout = net_layout();
  if (get<std::uint32_t>(in, ctx) != layout.size()) throw FormatError(ctx + ": layout mismatch");
  for (const auto& b : layout) {
    const auto len = get<std::uint32_t>(in, ctx);
    if (len > 256) throw FormatError(ctx + ": corrupt layout table");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError(ctx + ": truncated checkpoint");
    const auto offset = get<std::uint64_t>(in, ctx);
    const auto rows = get<std::uint32_t>(in, ctx);
    const auto cols = get<std::uint32_t>(in, ctx);
    if (name != b.name || offset != b.offset || rows != static_cast<std::uint32_t>(b.rows) ||
        cols != static_cast<std::uint32_t>(b.cols))
      throw FormatError(ctx + ": layout mismatch at block " + name);
  }
  if (get<std::uint64_t>(in, ctx) != param_count()) throw FormatError(ctx + ": parameter count mismatch");
  p.values.resize(param_count());
  for (auto& v : p.values) v = get<double>(in, ctx);
  return p;
}

RowMatrix forward(const NetParams& params, const Cylinder& cylinder, int S, std::uint64_t seed) {
  ad::Tape tape;
  Net net(tape, params, false);
  const auto g = net.run(cylinder, S, seed);
  return tape.value(g.probs);
}

ValueAndGrad value_and_grad(const NetParams& params, std::span<const TrainingSample> batch, int S,
                            const LossSpec& spec) {
  spec.weights.validate();
  if (batch.empty()) throw ConfigError("value_and_grad needs a non-empty batch");
  ValueAndGrad out;
  out.grad.assign(param_count(), 0.0);
  std::uint64_t structure = 0xcbf29ce484222325ULL;
  auto mix = [&structure](std::uint64_t v) {
    structure ^= v;
    structure *= 0x100000001b3ULL;
  };
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto& layout = net_layout();

  for (const auto& sample : batch) {
    const Cylinder& cyl = *sample.cylinder;
    if (sample.labels.size() != cyl.size()) throw ConfigError("labels do not match cylinder points");
    ad::Tape tape;
    Net net(tape, params, true);
    const auto g = net.run(cyl, S, sample.seed);
    const RowMatrix& probs = tape.value(g.probs);

    LossTerm l3 = loss_3d(probs, sample.labels, spec.loss3d);
    check_finite(l3.value, "l3d");
    RowMatrix dprobs = l3.grad;
    LossBreakdown lb;
    lb.l3d = l3.value;

    if (sample.truth) {
      const auto& plot = sample.truth->geometry();
      const auto win = plot.window(cyl.center, cyl.radius);
      const LayerTruth local = crop(*sample.truth, win);
      std::vector<std::pair<int, int>> cells;
      cells.reserve(cyl.size());
      for (const auto& p : cyl.xy) {
        const auto [r, c] = plot.pixel_of(p.x, p.y);
        cells.emplace_back(r - win.row_offset, c - win.col_offset);
      }
      SoftOccupancy occ = project_soft_cells(probs, cells, win.geometry);
      restrict_to_disk(occ, cyl.center, cyl.radius);
      const Loss2d l2 = loss_2d(occ, local);
      check_finite(l2.value, "l2d");
      lb.l2d = l2.value;
      if (spec.weights.lambda_2d != 0.0)
        dprobs += spec.weights.lambda_2d * project_soft_backward(occ, l2.grad, probs.rows());
      for (const auto& a : occ.argmax)
        for (int v : a.cells()) mix(static_cast<std::uint64_t>(v));
    }

    if (sample.mixture) {
      std::vector<double> z(cyl.size());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = cyl.features(static_cast<Eigen::Index>(i), kZ);
      const LossTerm le = loss_elevation(probs, z, *sample.mixture);
      check_finite(le.value, "lelev");
      lb.lelev = le.value;
      if (spec.weights.mu_elev != 0.0) dprobs += spec.weights.mu_elev * le.grad;
    }

    lb.total = total_loss(lb.l3d, lb.l2d, lb.lelev, spec.weights);
    check_finite(lb.total, "total");
    out.loss.l3d += lb.l3d * inv_b;
    out.loss.l2d += lb.l2d * inv_b;
    out.loss.lelev += lb.lelev * inv_b;
    out.loss.total += lb.total * inv_b;

    tape.accumulate(g.probs, dprobs * inv_b);
    tape.backward();
    mix(tape.structure());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const RowMatrix gi = tape.grad(net.vars()[i]);
      const auto& b = layout[i];
      for (std::size_t k = 0; k < b.size(); ++k) out.grad[b.offset + k] += gi.data()[k];
    }
  }
  for (std::size_t i = 0; i < layout.size(); ++i)
    for (std::size_t k = 0; k < layout[i].size(); ++k)
      if (!std::isfinite(out.grad[layout[i].offset + k]))
        throw NumericError("non-finite gradient in block " + layout[i].name);
  out.structure = structure;
  return out;
}

}  // namespace strata
