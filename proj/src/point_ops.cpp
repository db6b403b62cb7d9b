#include "strata/point_ops.hpp"

#include "strata/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace strata {

std::vector<int> subsample_indices(std::size_t m, std::size_t s, std::uint64_t seed) {
  if (m == 0) throw ConfigError("cannot subsample an empty cylinder");
  std::mt19937_64 rng(seed);
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  if (m >= s) {
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(s);
    return all;
  }
  std::uniform_int_distribution<int> pick(0, static_cast<int>(m) - 1);
  all.reserve(s);
  while (all.size() < s) all.push_back(pick(rng));
  return all;
}

std::vector<int> farthest_point_sample(const RowMatrix& xyz, int count) {
  const auto n = static_cast<int>(xyz.rows());
  if (n == 0 || count < 1) return {};
  count = std::min(count, n);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int current = 0;
  for (int s = 0; s < count; ++s) {
    out.push_back(current);
    best[static_cast<std::size_t>(current)] = -1.0;  // never picked twice
    const double cx = xyz(current, 0), cy = xyz(current, 1), cz = xyz(current, 2);
    int next = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      const double dx = xyz(i, 0) - cx, dy = xyz(i, 1) - cy, dz = xyz(i, 2) - cz;
      const double d = dx * dx + dy * dy + dz * dz;
      double& b = best[static_cast<std::size_t>(i)];
      if (b >= 0.0 && d < b) b = d;
      if (b > far) {
        far = b;
        next = i;
      }
    }
    current = next;
  }
  return out;
}

// ---------------------------------------------------------------------------

KdTree::KdTree(const RowMatrix& xyz) : pts_(xyz) {
  if (pts_.cols() != 3) throw InternalError("KdTree expects n x 3 points");
  order_.resize(static_cast<std::size_t>(pts_.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
  Node node{};
  node.begin = begin;
  node.end = end;
  for (int d = 0; d < 3; ++d) {
    node.lo[d] = std::numeric_limits<double>::infinity();
    node.hi[d] = -std::numeric_limits<double>::infinity();
  }
  for (int i = begin; i < end; ++i) {
    for (int d = 0; d < 3; ++d) {
      const double v = pts_(order_[static_cast<std::size_t>(i)], d);
      node.lo[d] = std::min(node.lo[d], v);
      node.hi[d] = std::max(node.hi[d], v);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  constexpr int kLeafSize = 12;
  if (end - begin <= kLeafSize) return id;
  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) axis = d;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return pts_(a, axis) < pts_(b, axis); });
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = l;
  nodes_[static_cast<std::size_t>(id)].right = r;
  return id;
}

double KdTree::dist2(const double* q, int i) const {
  const double dx = pts_(i, 0) - q[0], dy = pts_(i, 1) - q[1], dz = pts_(i, 2) - q[2];
  return dx * dx + dy * dy + dz * dz;
}

double KdTree::box_dist2(const Node& n, const double* q) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double v = q[d] < n.lo[d] ? n.lo[d] - q[d] : (q[d] > n.hi[d] ? q[d] - n.hi[d] : 0.0);
    s += v * v;
  }
  return s;
}

std::vector<std::pair<double, int>> KdTree::knn(const double* q, int k) const {
  std::vector<std::pair<double, int>> best;
  if (nodes_.empty() || k < 1) return best;
  k = std::min<int>(k, static_cast<int>(order_.size()));
  best.reserve(static_cast<std::size_t>(k) + 1);
  auto worst = [&] {
    return static_cast<int>(best.size()) < k ? std::numeric_limits<double>::infinity() : best.back().first;
  };
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const auto& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_dist2(n, q) > worst()) continue;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[static_cast<std::size_t>(i)];
        const std::pair<double, int> cand{dist2(q, idx), idx};
        if (static_cast<int>(best.size()) == k && !(cand < best.back())) continue;
        best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
        if (static_cast<int>(best.size()) > k) best.pop_back();
      }
      continue;
    }
    const auto& l = nodes_[static_cast<std::size_t>(n.left)];
    const auto& r = nodes_[static_cast<std::size_t>(n.right)];
    // Visit the closer child first.
    if (box_dist2(l, q) <= box_dist2(r, q)) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return best;
}

std::vector<std::pair<double, int>> KdTree::radius(const double* q, double r2) const {
  std::vector<std::pair<double, int>> out;
  if (nodes_.empty()) return out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const auto& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_dist2(n, q) > r2) continue;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[static_cast<std::size_t>(i)];
        const double d = dist2(q, idx);
        if (d <= r2) out.emplace_back(d, idx);
      }
      continue;
    }
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int KdTree::nearest(const double* q) const {
  const auto r = knn(q, 1);
  if (r.empty()) throw InternalError("nearest query on an empty tree");
  return r.front().second;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXi ball_query(const RowMatrix& source, const RowMatrix& queries, double r, int k) {
  const KdTree tree(source);
  Eigen::MatrixXi out(queries.rows(), k);
  const double r2 = r * r;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const double* q = queries.row(i).data();
    auto hits = tree.radius(q, r2);
    if (hits.empty()) hits = tree.knn(q, 1);
    for (int j = 0; j < k; ++j) {
      const auto& h = j < static_cast<int>(hits.size()) ? hits[static_cast<std::size_t>(j)] : hits.front();
      out(i, j) = h.second;
    }
  }
  return out;
}

Interpolation inverse_distance_weights(const RowMatrix& source, const RowMatrix& queries, int k) {
  const KdTree tree(source);
  k = std::min<int>(k, static_cast<int>(source.rows()));
  Interpolation out{Eigen::MatrixXi(queries.rows(), k), RowMatrix(queries.rows(), k)};
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const auto nn = tree.knn(queries.row(i).data(), k);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      const double w = 1.0 / std::max(nn[static_cast<std::size_t>(j)].first, 1e-10);
      out.index(i, j) = nn[static_cast<std::size_t>(j)].second;
      out.weights(i, j) = w;
      total += w;
    }
    out.weights.row(i) /= total;
  }
  return out;
}

std::vector<int> nearest_indices(const RowMatrix& source, const RowMatrix& queries) {
  const KdTree tree(source);
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i)
    out[static_cast<std::size_t>(i)] = tree.nearest(queries.row(i).data());
  return out;
}

}  // namespace strata
