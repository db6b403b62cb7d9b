#include "strata/baselines.hpp"

#include "strata/cylinder.hpp"
#include "strata/error.hpp"
#include "strata/io.hpp"
#include "strata/metrics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace strata {

int elevation_bin(double z) {
  if (!(z >= kElevationBinEdges.front()) || z > kElevationBinEdges.back()) return -1;
  const auto it = std::upper_bound(kElevationBinEdges.begin(), kElevationBinEdges.end(), z);
  const int idx = static_cast<int>(it - kElevationBinEdges.begin()) - 1;
  return std::min(idx, static_cast<int>(kElevationBinEdges.size()) - 2);
}

PixelFeatureGrid pixel_features(const PlotCloud& cloud, double pixel_size) {
  PixelFeatureGrid g;
  g.geometry = RasterGeometry::for_cloud(cloud, pixel_size);
  const std::size_t n = g.geometry.size();
  g.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), kPixelFeatureCount);
  g.nonempty.assign(n, 0);
  std::vector<std::size_t> count(n, 0);
  std::vector<double> sum(n, 0.0), sum_i(n, 0.0), sum_r(n, 0.0);
  for (const auto& p : cloud.points()) {
    const auto [r, c] = g.geometry.pixel_of(p.x, p.y);
    const std::size_t k = g.pixel(r, c);
    auto row = g.values.row(static_cast<Eigen::Index>(k));
    if (count[k] == 0) {
      row(kMaxZ) = p.z;
      row(kMinZ) = p.z;
    } else {
      row(kMaxZ) = std::max(row(kMaxZ), p.z);
      row(kMinZ) = std::min(row(kMinZ), p.z);
    }
    ++count[k];
    sum[k] += p.z;
    sum_i[k] += normalized_intensity(p.intensity, cloud.intensity_scale());
    sum_r[k] += p.return_number;
    if (const int b = elevation_bin(p.z); b >= 0) row(kFirstBin + b) += 1.0;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (count[k] == 0) continue;
    g.nonempty[k] = 1;
    const double cnt = static_cast<double>(count[k]);
    auto row = g.values.row(static_cast<Eigen::Index>(k));
    row(kMeanZ) = sum[k] / cnt;
    row(kMeanIntensity) = sum_i[k] / cnt;
    row(kMeanReturn) = sum_r[k] / cnt;
  }
  // Population standard deviation, two-pass.
  std::vector<double> ss(n, 0.0);
  for (const auto& p : cloud.points()) {
    const auto [r, c] = g.geometry.pixel_of(p.x, p.y);
    const std::size_t k = g.pixel(r, c);
    const double d = p.z - g.values(static_cast<Eigen::Index>(k), kMeanZ);
    ss[k] += d * d;
  }
  for (std::size_t k = 0; k < n; ++k)
    if (count[k] > 0) g.values(static_cast<Eigen::Index>(k), kStdZ) = std::sqrt(ss[k] / static_cast<double>(count[k]));
  return g;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const RowMatrix& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double m = x.rows() > 0 ? x.col(j).sum() / n : 0.0;
    const double var = x.rows() > 0 ? (x.col(j).array() - m).square().sum() / n : 0.0;
    s.mean.push_back(m);
    s.scale.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
  }
  return s;
}

RowMatrix Standardizer::apply(const RowMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != mean.size()) throw ConfigError("feature width mismatch");
  RowMatrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.col(j) = (x.col(j).array() - mean[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
  return out;
}

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Eigen::VectorXd weights_of(const LogisticModel& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.weights.data(), static_cast<Eigen::Index>(m.weights.size()));
}

}  // namespace

LogisticModel fit_logistic(const RowMatrix& x, std::span<const int> y, const LogisticOptions& opts) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) throw ConfigError("fit_logistic: bad training set");
  LogisticModel m;
  m.standardizer = Standardizer::fit(x);
  m.weights.assign(static_cast<std::size_t>(x.cols()), 0.0);
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (pos == 0 || pos == y.size()) {
    m.constant = (static_cast<double>(pos) + 0.5) / (static_cast<double>(y.size()) + 1.0);
    m.warnings.push_back("single-class training set; using a constant predictor");
    return m;
  }
  const RowMatrix z = m.standardizer.apply(x);
  Eigen::VectorXd t(z.rows());
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(z.cols());
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  for (int it = 0; it < opts.iterations; ++it) {
    Eigen::VectorXd logits = z * w;
    Eigen::VectorXd r(z.rows());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(logits(i) + b) - t(i);
    const Eigen::VectorXd gw = z.transpose() * r * inv_n + opts.l2 * w;
    const double gb = r.sum() * inv_n;
    w -= opts.lr * gw;
    b -= opts.lr * gb;
  }
  m.weights.assign(w.data(), w.data() + w.size());
  m.bias = b;
  return m;
}

std::vector<double> predict_logistic(const LogisticModel& m, const RowMatrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  if (m.constant) {
    std::fill(out.begin(), out.end(), *m.constant);
    return out;
  }
  const Eigen::VectorXd logits = m.standardizer.apply(x) * weights_of(m);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(logits(static_cast<Eigen::Index>(i)) + m.bias);
  return out;
}

double logistic_objective(const LogisticModel& m, const RowMatrix& x, std::span<const int> y, double l2) {
  const auto p = predict_logistic(m, x);
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    loss -= y[i] == 1 ? std::log(q) : std::log1p(-q);
  }
  loss /= static_cast<double>(p.size());
  if (!m.constant) loss += 0.5 * l2 * weights_of(m).squaredNorm();
  return loss;
}

// ---------------------------------------------------------------------------

double DecisionTree::predict(const double* x) const {
  int k = 0;
  while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(k)];
    k = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(k)].value;
}

int DecisionTree::depth() const {
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    const auto [k, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes[static_cast<std::size_t>(k)];
    if (n.feature >= 0) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrix& x, std::span<const double> y, ForestTask task, int num_classes, int max_depth,
              int max_features, std::mt19937_64& rng)
      : x_(x), y_(y), task_(task), k_(num_classes), max_depth_(max_depth), mtry_(max_features), rng_(rng) {}

  DecisionTree build(std::vector<int> rows) {
    DecisionTree t;
    nodes_ = &t.nodes;
    grow(std::move(rows), 0);
    return t;
  }

 private:
  // Impurity times sample count: Gini * n, or sum of squared deviations.
  double impurity(const std::vector<double>& counts, double n, double sum, double sumsq) const {
    if (n <= 0.0) return 0.0;
    if (task_ == ForestTask::Regression) return std::max(0.0, sumsq - sum * sum / n);
    double g = 1.0;
    for (double c : counts) g -= (c / n) * (c / n);
    return g * n;
  }

  double leaf_value(const std::vector<int>& rows) const {
    if (task_ == ForestTask::Regression) {
      double s = 0.0;
      for (int r : rows) s += y_[static_cast<std::size_t>(r)];
      return s / static_cast<double>(rows.size());
    }
    std::vector<int> counts(static_cast<std::size_t>(k_), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])];
    return static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  int grow(std::vector<int> rows, int depth) {
    const int id = static_cast<int>(nodes_->size());
    nodes_->push_back({});
    (*nodes_)[static_cast<std::size_t>(id)].value = leaf_value(rows);
    if (depth >= max_depth_ || rows.size() < 2) return id;

    const double n = static_cast<double>(rows.size());
    std::vector<double> counts(static_cast<std::size_t>(std::max(k_, 1)), 0.0);
    double sum = 0.0, sumsq = 0.0;
    for (int r : rows) {
      const double v = y_[static_cast<std::size_t>(r)];
      if (task_ == ForestTask::Classification) counts[static_cast<std::size_t>(v)] += 1.0;
      sum += v;
      sumsq += v * v;
    }
    const double parent = impurity(counts, n, sum, sumsq);
    if (parent <= 1e-12) return id;

    std::vector<int> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(features.size()) - 1);
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng_))]);
    }

    int best_f = -1;
    double best_thr = 0.0, best_imp = parent - 1e-12;
    std::vector<int> sorted = rows;
    for (int fi = 0; fi < mtry_; ++fi) {
      const int f = features[static_cast<std::size_t>(fi)];
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::vector<double> lc(counts.size(), 0.0);
      double ls = 0.0, lss = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double v = y_[static_cast<std::size_t>(sorted[i])];
        if (task_ == ForestTask::Classification) lc[static_cast<std::size_t>(v)] += 1.0;
        ls += v;
        lss += v * v;
        const double xa = x_(sorted[i], f), xb = x_(sorted[i + 1], f);
        if (xa == xb) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        std::vector<double> rc(counts.size());
        for (std::size_t c = 0; c < rc.size(); ++c) rc[c] = counts[c] - lc[c];
        const double imp = impurity(lc, nl, ls, lss) + impurity(rc, nr, sum - ls, sumsq - lss);
        if (imp < best_imp) {
          best_imp = imp;
          best_f = f;
          best_thr = 0.5 * (xa + xb);
          if (!(best_thr > xa && best_thr <= xb)) best_thr = xa;
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<int> left, right;
    for (int r : rows) (x_(r, best_f) <= best_thr ? left : right).push_back(r);
    if (left.empty() || right.empty()) return id;
    const int l = grow(std::move(left), depth + 1);
    const int rr = grow(std::move(right), depth + 1);
    auto& node = (*nodes_)[static_cast<std::size_t>(id)];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = rr;
    return id;
  }

  const RowMatrix& x_;
  std::span<const double> y_;
  ForestTask task_;
  int k_;
  int max_depth_;
  int mtry_;
  std::mt19937_64& rng_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

}  // namespace

ForestModel fit_forest(const RowMatrix& x, std::span<const double> y, ForestTask task, const ForestOptions& opts) {
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) throw ConfigError("fit_forest: bad training set");
  if (opts.trees < 1 || opts.max_depth < 0) throw ConfigError("fit_forest: bad options");
  ForestModel m;
  m.task = task;
  if (task == ForestTask::Classification) {
    int k = 0;
    for (double v : y) {
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("classification targets must be class ids");
      k = std::max(k, static_cast<int>(v) + 1);
    }
    m.num_classes = k;
  }
  const int d = static_cast<int>(x.cols());
  int mtry = opts.max_features.value_or(task == ForestTask::Classification
                                            ? static_cast<int>(std::floor(std::sqrt(static_cast<double>(d))))
                                            : d / 3);
  mtry = std::clamp(mtry, 1, d);
  const int n = static_cast<int>(x.rows());
  for (int t = 0; t < opts.trees; ++t) {
    const std::uint64_t seed = derive_seed(opts.seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(seed);
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (opts.bootstrap) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder b(x, y, task, m.num_classes, opts.max_depth, mtry, rng);
    DecisionTree tree = b.build(std::move(rows));
    tree.seed = seed;
    m.trees.push_back(std::move(tree));
  }
  return m;
}

std::vector<double> predict_forest(const ForestModel& m, const RowMatrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<int> votes(static_cast<std::size_t>(std::max(m.num_classes, 1)));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double* row = x.row(i).data();
    if (m.task == ForestTask::Regression) {
      double s = 0.0;
      for (const auto& t : m.trees) s += t.predict(row);
      out[static_cast<std::size_t>(i)] = s / static_cast<double>(m.trees.size());
    } else {
      std::fill(votes.begin(), votes.end(), 0);
      for (const auto& t : m.trees) ++votes[static_cast<std::size_t>(t.predict(row))];
      out[static_cast<std::size_t>(i)] = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

LinearModel fit_linreg(const RowMatrix& x, std::span<const double> y, double ridge) {
  const auto n = x.rows(), d = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw ConfigError("fit_linreg: lengths differ");
  if (n < d + 1) throw ConfigError("fit_linreg needs at least d + 1 samples");
  LinearModel m;
  m.standardizer = Standardizer::fit(x);
  RowMatrix a(n, d + 1);
  a.col(0).setOnes();
  a.rightCols(d) = m.standardizer.apply(x);
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  Eigen::MatrixXd ata = a.transpose() * a;
  for (Eigen::Index j = 1; j <= d; ++j) ata(j, j) += ridge;
  const Eigen::VectorXd aty = a.transpose() * t;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw NumericError("fit_linreg: normal equations are rank-deficient");
  const Eigen::VectorXd beta = ldlt.solve(aty);
  if (!beta.allFinite()) throw NumericError("fit_linreg: non-finite solution");
  m.beta.assign(beta.data(), beta.data() + beta.size());
  return m;
}

std::vector<double> predict_linreg(const LinearModel& m, const RowMatrix& x) {
  const RowMatrix z = m.standardizer.apply(x);
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double v = m.beta[0];
    for (Eigen::Index j = 0; j < z.cols(); ++j) v += m.beta[static_cast<std::size_t>(j + 1)] * z(i, j);
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

double LinearModel::raw_intercept() const {
  double b = beta[0];
  for (std::size_t j = 0; j + 1 < beta.size(); ++j) b -= beta[j + 1] * standardizer.mean[j] / standardizer.scale[j];
  return b;
}

std::vector<double> LinearModel::raw_slopes() const {
  std::vector<double> s;
  for (std::size_t j = 0; j + 1 < beta.size(); ++j) s.push_back(beta[j + 1] / standardizer.scale[j]);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

void write_standardizer(std::ostream& out, const Standardizer& s) {
  out << "mean";
  for (double v : s.mean) out << ' ' << format_double(v);
  out << "\nscale";
  for (double v : s.scale) out << ' ' << format_double(v);
  out << '\n';
}

}  // namespace

void write_model(std::ostream& out, const LogisticModel& m) {
  out << "logistic\n";
  if (m.constant) {
    out << "constant " << format_double(*m.constant) << '\n';
    return;
  }
  write_standardizer(out, m.standardizer);
  out << "bias " << format_double(m.bias) << "\nweights";
  for (double w : m.weights) out << ' ' << format_double(w);
  out << '\n';
}

void write_model(std::ostream& out, const ForestModel& m) {
  out << "forest " << (m.task == ForestTask::Classification ? "classification" : "regression") << " classes "
      << m.num_classes << " trees " << m.trees.size() << '\n';
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    out << "tree " << t << " seed " << m.trees[t].seed << " nodes " << m.trees[t].nodes.size() << '\n';
    for (std::size_t k = 0; k < m.trees[t].nodes.size(); ++k) {
      const auto& n = m.trees[t].nodes[k];
      if (n.feature < 0) out << "  " << k << " leaf " << format_double(n.value) << '\n';
      else
        out << "  " << k << " split " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' '
            << n.right << '\n';
    }
  }
}

void write_model(std::ostream& out, const LinearModel& m) {
  out << "linear\n";
  write_standardizer(out, m.standardizer);
  out << "beta";
  for (double b : m.beta) out << ' ' << format_double(b);
  out << '\n';
}

// ---------------------------------------------------------------------------

namespace {

struct HeightSpec {
  Layer layer;
  bool top;
};
constexpr HeightSpec kHeightSpecs[4] = {{Layer::GroundVegetation, true},
                                         {Layer::Understory, true},
                                         {Layer::Overstory, false},
                                         {Layer::Overstory, true}};

RowMatrix rows_of(const RowMatrix& values, const std::vector<std::size_t>& idx) {
  RowMatrix out(static_cast<Eigen::Index>(idx.size()), values.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

BaselineModels train_baselines(std::span<const BaselinePlot> plots, double pixel_size, std::uint64_t seed) {
  if (plots.empty()) throw ConfigError("no baseline training plots");
  BaselineModels m;
  m.pixel_size = pixel_size;
  std::array<std::vector<std::vector<double>>, 3> occ_x;
  std::array<std::vector<int>, 3> occ_y;
  std::array<std::vector<std::vector<double>>, 4> h_x;
  std::array<std::vector<double>, 4> h_y;
  for (const auto& plot : plots) {
    const auto f = pixel_features(plot.cloud, pixel_size);
    if (!(f.geometry == plot.truth.geometry()) || !(f.geometry == plot.reference.geometry))
      throw ConfigError("baseline plot " + plot.cloud.plot_id() + ": raster geometries differ");
    for (int r = 0; r < f.geometry.rows; ++r) {
      for (int c = 0; c < f.geometry.cols; ++c) {
        const std::size_t k = f.pixel(r, c);
        if (!f.nonempty[k]) continue;
        const auto row = f.values.row(static_cast<Eigen::Index>(k));
        const std::vector<double> feat(row.data(), row.data() + row.size());
        for (std::size_t l = 0; l < 3; ++l) {
          const Cell cell = plot.truth.layers[l].at(r, c);
          if (cell == Cell::NoData) continue;
          occ_x[l].push_back(feat);
          occ_y[l].push_back(cell == Cell::Full ? 1 : 0);
        }
        for (std::size_t t = 0; t < 4; ++t) {
          const auto& ref = plot.reference[kHeightSpecs[t].layer];
          if (!ref.occupied.at(r, c)) continue;
          h_x[t].push_back(feat);
          h_y[t].push_back(kHeightSpecs[t].top ? ref.hmax.at(r, c) : ref.hmin.at(r, c));
        }
      }
    }
  }
  auto to_matrix = [](const std::vector<std::vector<double>>& rows) {
    RowMatrix x(static_cast<Eigen::Index>(rows.size()), kPixelFeatureCount);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < kPixelFeatureCount; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    return x;
  };
  for (std::size_t l = 0; l < 3; ++l) {
    if (occ_y[l].empty()) throw ConfigError("no labeled pixels for layer " + std::string(layer_name(kLayers[l])));
    const RowMatrix x = to_matrix(occ_x[l]);
    m.logistic[l] = fit_logistic(x, occ_y[l]);
    std::vector<double> y(occ_y[l].begin(), occ_y[l].end());
    ForestOptions fo;
    fo.seed = derive_seed(seed, 10 + l);
    m.forest[l] = fit_forest(x, y, ForestTask::Classification, fo);
  }
  for (std::size_t t = 0; t < 4; ++t) {
    if (h_y[t].size() < static_cast<std::size_t>(kPixelFeatureCount + 1)) continue;
    const RowMatrix x = to_matrix(h_x[t]);
    m.linear[t] = fit_linreg(x, h_y[t]);
    ForestOptions fo;
    fo.seed = derive_seed(seed, 20 + t);
    m.forest_height[t] = fit_forest(x, h_y[t], ForestTask::Regression, fo);
  }
  return m;
}

std::array<Grid<std::uint8_t>, 3> predict_occupancy(const BaselineModels& m, OccupancyModelKind kind,
                                                    const PixelFeatureGrid& features) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < features.nonempty.size(); ++k)
    if (features.nonempty[k]) idx.push_back(k);
  const RowMatrix x = rows_of(features.values, idx);
  std::array<Grid<std::uint8_t>, 3> out;
  for (std::size_t l = 0; l < 3; ++l) {
    out[l] = Grid<std::uint8_t>(features.geometry, 0);
    if (idx.empty()) continue;
    std::vector<double> p = kind == OccupancyModelKind::Logistic ? predict_logistic(m.logistic[l], x)
                                                                 : predict_forest(m.forest[l], x);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const bool full = kind == OccupancyModelKind::Logistic ? p[i] >= 0.5 : p[i] == 1.0;
      out[l].cells()[idx[i]] = full ? 1 : 0;
    }
  }
  return out;
}

LayerProduct predict_baseline_product(const BaselineModels& m, OccupancyModelKind occ, HeightModelKind heights,
                                      const PixelFeatureGrid& features) {
  const auto grids = predict_occupancy(m, occ, features);
  LayerProduct p = empty_product(features.geometry);
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < features.nonempty.size(); ++k)
    if (features.nonempty[k]) idx.push_back(k);
  const RowMatrix x = rows_of(features.values, idx);
  std::array<std::vector<double>, 4> h;
  for (std::size_t t = 0; t < 4; ++t) {
    if (idx.empty()) continue;
    if (heights == HeightModelKind::Linear && m.linear[t]) h[t] = predict_linreg(*m.linear[t], x);
    else if (heights == HeightModelKind::Forest && m.forest_height[t]) h[t] = predict_forest(*m.forest_height[t], x);
    else h[t].assign(idx.size(), 0.0);
  }
  for (std::size_t l = 0; l < 3; ++l) p.layers[l].occupied = grids[l];
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t k = idx[i];
    for (std::size_t t = 0; t < 4; ++t) {
      auto& lr = p[kHeightSpecs[t].layer];
      const double v = std::max(0.0, h[t][i]);
      (kHeightSpecs[t].top ? lr.hmax : lr.hmin).cells()[k] = v;
    }
    auto& over = p[Layer::Overstory];
    over.hmin.cells()[k] = std::min(over.hmin.cells()[k], over.hmax.cells()[k]);
  }
  for (auto& l : p.layers)
    for (std::size_t k = 0; k < l.occupied.cells().size(); ++k)
      if (!l.occupied.cells()[k]) l.hmin.cells()[k] = l.hmax.cells()[k] = 0.0;
  return p;
}

void write_models(const BaselineModels& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < 3; ++l) {
    const std::string name(layer_name(kLayers[l]));
    std::ofstream lo(dir / ("logistic_" + name + ".txt"));
    write_model(lo, m.logistic[l]);
    std::ofstream fo(dir / ("forest_" + name + ".txt"));
    write_model(fo, m.forest[l]);
    if (!lo || !fo) throw FormatError("failed writing baseline models in " + dir.string());
  }
  for (std::size_t t = 0; t < 4; ++t) {
    const std::string name(height_target_name(kHeightTargets[t]));
    if (m.linear[t]) {
      std::ofstream out(dir / ("linear_" + name + ".txt"));
      write_model(out, *m.linear[t]);
    }
    if (m.forest_height[t]) {
      std::ofstream out(dir / ("forest_" + name + ".txt"));
      write_model(out, *m.forest_height[t]);
    }
  }
}

}  // namespace strata
