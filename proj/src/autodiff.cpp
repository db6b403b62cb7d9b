#include "strata/autodiff.hpp"

#include "strata/error.hpp"

#include <cmath>

namespace strata::ad {

Var Tape::push(RowMatrix value, bool requires_grad,
               std::function<void(Tape&, const RowMatrix&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Tape::mix(std::uint64_t v) {
  structure_ ^= v;
  structure_ *= 0x100000001b3ULL;
}

Var Tape::constant(RowMatrix value) { return push(std::move(value), false); }

Var Tape::leaf(RowMatrix value) { return push(std::move(value), true); }

RowMatrix& Tape::grad_slot(Var v) {
  auto& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = RowMatrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

RowMatrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.id];
  if (n.grad.size() == 0) return RowMatrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const RowMatrix& g) {
  if (!nodes_[v.id].requires_grad) return;
  auto& slot = grad_slot(v);
  if (slot.rows() != g.rows() || slot.cols() != g.cols())
    throw InternalError("gradient shape mismatch");
  slot += g;
}

void Tape::backward() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    // The closure may append to other nodes' gradients but never to this one.
    const RowMatrix g = std::move(n.grad);
    n.backward(*this, g);
    n.grad = g;
  }
}

Var Tape::gather_rows(Var x, std::vector<int> rows) {
  const auto& xv = value(x);
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = xv.row(rows[i]);
  return push(std::move(out), requires_grad(x), [x, rows = std::move(rows)](Tape& t, const RowMatrix& g) {
    auto& gx = t.grad_slot(x);
    for (std::size_t i = 0; i < rows.size(); ++i) gx.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  if (av.rows() != bv.rows()) throw InternalError("concat_cols row mismatch");
  RowMatrix out(av.rows(), av.cols() + bv.cols());
  out.leftCols(av.cols()) = av;
  out.rightCols(bv.cols()) = bv;
  const auto ac = av.cols();
  const auto bc = bv.cols();
  const bool ga = requires_grad(a), gb = requires_grad(b);
  return push(std::move(out), ga || gb, [a, b, ac, bc, ga, gb](Tape& t, const RowMatrix& g) {
    if (ga) t.grad_slot(a) += g.leftCols(ac);
    if (gb) t.grad_slot(b) += g.rightCols(bc);
  });
}

Var Tape::affine(Var x, Var w, Var b) {
  const auto& xv = value(x);
  const auto& wv = value(w);
  const auto& bv = value(b);
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols())
    throw InternalError("affine shape mismatch");
  RowMatrix out(xv.rows(), wv.cols());
  out.noalias() = xv * wv;
  out.rowwise() += bv.row(0);
  const bool gx = requires_grad(x), gw = requires_grad(w), gb = requires_grad(b);
  return push(std::move(out), gx || gw || gb, [x, w, b, gx, gw, gb](Tape& t, const RowMatrix& g) {
    if (gw) t.grad_slot(w).noalias() += t.value(x).transpose() * g;
    if (gb) t.grad_slot(b) += g.colwise().sum();
    if (gx) t.grad_slot(x).noalias() += g * t.value(w).transpose();
  });
}

Var Tape::relu(Var x) {
  RowMatrix out = value(x).cwiseMax(0.0);
  std::uint64_t bits = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    bits = (bits << 1) | (out.data()[i] > 0.0 ? 1u : 0u);
    if ((i & 63) == 63) mix(bits);
  }
  mix(bits);
  return push(std::move(out), requires_grad(x), [x](Tape& t, const RowMatrix& g) {
    const auto& xv = t.value(x);
    t.grad_slot(x).array() += (xv.array() > 0.0).select(g.array(), 0.0);
  });
}

Var Tape::group_max(Var x, int group) {
  const auto& xv = value(x);
  if (group < 1 || xv.rows() % group != 0) throw InternalError("group_max: bad group size");
  const Eigen::Index n = xv.rows() / group;
  const Eigen::Index c = xv.cols();
  RowMatrix out(n, c);
  Eigen::MatrixXi arg(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index base = i * group;
    for (Eigen::Index j = 0; j < c; ++j) {
      Eigen::Index best = base;
      double bv = xv(base, j);
      for (Eigen::Index k = 1; k < group; ++k) {
        const double v = xv(base + k, j);
        if (v > bv) {
          bv = v;
          best = base + k;
        }
      }
      out(i, j) = bv;
      arg(i, j) = static_cast<int>(best);
      mix(static_cast<std::uint64_t>(best));
    }
  }
  return push(std::move(out), requires_grad(x), [x, arg = std::move(arg)](Tape& t, const RowMatrix& g) {
    auto& gx = t.grad_slot(x);
    for (Eigen::Index i = 0; i < arg.rows(); ++i)
      for (Eigen::Index j = 0; j < arg.cols(); ++j) gx(arg(i, j), j) += g(i, j);
  });
}

Var Tape::weighted_gather(Var x, Eigen::MatrixXi index, RowMatrix weights) {
  const auto& xv = value(x);
  if (index.rows() != weights.rows() || index.cols() != weights.cols())
    throw InternalError("weighted_gather shape mismatch");
  RowMatrix out = RowMatrix::Zero(index.rows(), xv.cols());
  for (Eigen::Index i = 0; i < index.rows(); ++i)
    for (Eigen::Index k = 0; k < index.cols(); ++k) out.row(i) += weights(i, k) * xv.row(index(i, k));
  return push(std::move(out), requires_grad(x),
              [x, index = std::move(index), weights = std::move(weights)](Tape& t, const RowMatrix& g) {
                auto& gx = t.grad_slot(x);
                for (Eigen::Index i = 0; i < index.rows(); ++i)
                  for (Eigen::Index k = 0; k < index.cols(); ++k)
                    gx.row(index(i, k)) += weights(i, k) * g.row(i);
              });
}

Var Tape::softmax_rows(Var x) {
  const auto& xv = value(x);
  RowMatrix out(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double m = xv.row(i).maxCoeff();
    out.row(i) = (xv.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  const Var self{nodes_.size()};
  return push(std::move(out), requires_grad(x), [x, self](Tape& t, const RowMatrix& g) {
    const auto& p = t.value(self);
    auto& gx = t.grad_slot(x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double dot = p.row(i).dot(g.row(i));
      gx.row(i).array() += p.row(i).array() * (g.row(i).array() - dot);
    }
  });
}

}  // namespace strata::ad
