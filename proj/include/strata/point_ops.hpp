#pragma once

#include "strata/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace strata {

/// S indices into [0, m): uniform without replacement when m >= s; otherwise all
/// of 0..m-1 followed by (s - m) draws with replacement. Throws on m == 0.
std::vector<int> subsample_indices(std::size_t m, std::size_t s, std::uint64_t seed);

/// Farthest-point sampling over the rows of `xyz` (n x 3), starting at row 0.
/// Ties pick the lowest index.
std::vector<int> farthest_point_sample(const RowMatrix& xyz, int count);

/// Static kd-tree over 3-D points. Neighbor order is (squared distance, index)
/// lexicographic, identical to an exhaustive scan.
class KdTree {
 public:
  explicit KdTree(const RowMatrix& xyz);

  /// Up to k nearest neighbors of q, nearest first.
  std::vector<std::pair<double, int>> knn(const double* q, int k) const;
  /// Every point with squared distance <= r2, nearest first.
  std::vector<std::pair<double, int>> radius(const double* q, double r2) const;
  int nearest(const double* q) const;

  std::size_t size() const { return static_cast<std::size_t>(pts_.rows()); }

 private:
  struct Node {
    int begin = 0, end = 0;  // range in order_
    int left = -1, right = -1;
    double lo[3] = {}, hi[3] = {};
  };
  int build(int begin, int end);
  double dist2(const double* q, int i) const;
  static double box_dist2(const Node& n, const double* q);

  RowMatrix pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// For each query row, `k` neighbors inside the ball of radius r among `source`
/// rows (nearest first), padded by repeating the nearest one. Every query is
/// expected to have at least one source within the ball (queries are sources).
Eigen::MatrixXi ball_query(const RowMatrix& source, const RowMatrix& queries, double r, int k);

/// Inverse squared-distance weights over the k nearest sources of each query.
struct Interpolation {
  Eigen::MatrixXi index;
  RowMatrix weights;
};
Interpolation inverse_distance_weights(const RowMatrix& source, const RowMatrix& queries, int k);

/// Nearest source row of every query row.
std::vector<int> nearest_indices(const RowMatrix& source, const RowMatrix& queries);

}  // namespace strata
