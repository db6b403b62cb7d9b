#pragma once

#include "strata/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace strata::ad {

/// Handle to a matrix value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape over row-major matrices.
///
/// Every op appends a node holding its value and a closure that pushes the
/// node's gradient onto its inputs. backward() replays the closures in reverse
/// order. Nodes that do not depend on a leaf never allocate gradients.
///
/// Subgradient conventions: relu'(0) = 0; group_max routes to the first
/// maximal row of each group.
class Tape {
 public:
  Var constant(RowMatrix value);
  Var leaf(RowMatrix value);

  const RowMatrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient accumulated on v; a zero matrix when nothing reached it.
  RowMatrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Adds g to the gradient of v (used to seed the backward pass).
  void accumulate(Var v, const RowMatrix& g);
  void backward();

  std::size_t size() const { return nodes_.size(); }

  /// Digest of every data-dependent branch taken so far (ReLU masks, max-pool
  /// argmaxes). Two evaluations with equal digests follow the same linear piece.
  std::uint64_t structure() const { return structure_; }

  // ---- ops -------------------------------------------------------------
  Var gather_rows(Var x, std::vector<int> rows);
  Var concat_cols(Var a, Var b);
  /// x * w + b, with b a 1 x cols row.
  Var affine(Var x, Var w, Var b);
  Var relu(Var x);
  /// Max over consecutive groups of `group` rows.
  Var group_max(Var x, int group);
  /// out.row(i) = sum_k weights(i, k) * x.row(index(i, k)); weights are constants.
  Var weighted_gather(Var x, Eigen::MatrixXi index, RowMatrix weights);
  Var softmax_rows(Var x);

 private:
  struct Node {
    RowMatrix value;
    RowMatrix grad;
    bool requires_grad = false;
    std::function<void(Tape&, const RowMatrix&)> backward;
  };

  Var push(RowMatrix value, bool requires_grad,
           std::function<void(Tape&, const RowMatrix&)> backward = {});
  RowMatrix& grad_slot(Var v);

  void mix(std::uint64_t v);

  std::vector<Node> nodes_;
  std::uint64_t structure_ = 0xcbf29ce484222325ULL;
};

}  // namespace strata::ad
