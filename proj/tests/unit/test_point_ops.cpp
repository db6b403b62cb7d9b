#include "strata/autodiff.hpp"
#include "strata/error.hpp"
#include "strata/point_ops.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

namespace strata {
namespace {

RowMatrix random_points(std::mt19937_64& rng, int n, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RowMatrix m(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u(rng);
  return m;
}

double d2(const RowMatrix& a, int i, const double* q) {
  double s = 0;
  for (int j = 0; j < 3; ++j) s += (a(i, j) - q[j]) * (a(i, j) - q[j]);
  return s;
}

TEST(Subsample, PermutationWhenEqual) {
  auto idx = subsample_indices(5, 5, 1);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Subsample, PaddingWhenShort) {
  const auto idx = subsample_indices(3, 5, 2);
  ASSERT_EQ(idx.size(), 5u);
  EXPECT_EQ(std::set<int>(idx.begin(), idx.end()), (std::set<int>{0, 1, 2}));
}

TEST(Subsample, LargeIdentityMultiset) {
  auto idx = subsample_indices(16384, 16384, 3);
  std::sort(idx.begin(), idx.end());
  for (int i = 0; i < 16384; ++i) ASSERT_EQ(idx[static_cast<std::size_t>(i)], i);
}

TEST(Subsample, WithoutReplacementAndSeeded) {
  const auto a = subsample_indices(1000, 100, 4);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 100u);
  EXPECT_EQ(a, subsample_indices(1000, 100, 4));
  EXPECT_NE(a, subsample_indices(1000, 100, 5));
  EXPECT_THROW(subsample_indices(0, 4, 1), ConfigError);
}

TEST(Fps, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  const RowMatrix pts = random_points(rng, 300);
  const auto got = farthest_point_sample(pts, 40);
  std::vector<int> expect{0};
  std::vector<double> best(300, std::numeric_limits<double>::infinity());
  while (expect.size() < 40) {
    const int last = expect.back();
    int arg = -1;
    double far = -1;
    for (int i = 0; i < 300; ++i) {
      best[static_cast<std::size_t>(i)] = std::min(best[static_cast<std::size_t>(i)], d2(pts, i, &pts(last, 0)));
      if (best[static_cast<std::size_t>(i)] > far) {
        far = best[static_cast<std::size_t>(i)];
        arg = i;
      }
    }
    expect.push_back(arg);
  }
  EXPECT_EQ(got, expect);
}

TEST(KdTree, KnnAndRadiusMatchExhaustiveScan) {
  std::mt19937_64 rng(22);
  const RowMatrix pts = random_points(rng, 500);
  // duplicates exercise the index tie-break
  RowMatrix all(520, 3);
  all << pts, pts.topRows(20);
  const KdTree tree(all);
  for (int t = 0; t < 100; ++t) {
    const RowMatrix q = random_points(rng, 1);
    std::vector<std::pair<double, int>> brute;
    for (int i = 0; i < 520; ++i) brute.emplace_back(d2(all, i, q.data()), i);
    std::sort(brute.begin(), brute.end());
    const auto knn = tree.knn(q.data(), 7);
    const std::vector<std::pair<double, int>> top7(brute.begin(), brute.begin() + 7);
    EXPECT_EQ(knn, top7);
    std::vector<std::pair<double, int>> inside;
    for (const auto& b : brute)
      if (b.first <= 4.0) inside.push_back(b);
    EXPECT_EQ(tree.radius(q.data(), 4.0), inside);
    EXPECT_EQ(tree.nearest(q.data()), brute[0].second);
  }
}

TEST(BallQuery, PadsWithNearest) {
  RowMatrix src(3, 3);
  src << 0, 0, 0, 0.5, 0, 0, 10, 0, 0;
  const auto idx = ball_query(src, src, 1.0, 4);
  ASSERT_EQ(idx.rows(), 3);
  EXPECT_EQ(idx(0, 0), 0);
  EXPECT_EQ(idx(0, 1), 1);
  EXPECT_EQ(idx(0, 2), 0);
  EXPECT_EQ(idx(0, 3), 0);
  EXPECT_EQ(idx(2, 1), 2);
}

TEST(Interpolation, WeightsNormalized) {
  std::mt19937_64 rng(23);
  const RowMatrix src = random_points(rng, 50), q = random_points(rng, 30);
  const auto w = inverse_distance_weights(src, q, 3);
  for (int i = 0; i < 30; ++i) {
    EXPECT_NEAR(w.weights.row(i).sum(), 1.0, 1e-12);
    EXPECT_GE(w.weights(i, 0), w.weights(i, 1));
  }
  // a query on top of a source gets (almost) all weight there
  const auto self = inverse_distance_weights(src, src.topRows(1), 3);
  EXPECT_EQ(self.index(0, 0), 0);
  EXPECT_GT(self.weights(0, 0), 1.0 - 1e-6);
}

TEST(Interpolation, NearestIndices) {
  std::mt19937_64 rng(24);
  const RowMatrix src = random_points(rng, 80), q = random_points(rng, 40);
  const auto nn = nearest_indices(src, q);
  for (int i = 0; i < 40; ++i) {
    int best = 0;
    for (int j = 1; j < 80; ++j)
      if (d2(src, j, &q(i, 0)) < d2(src, best, &q(i, 0))) best = j;
    EXPECT_EQ(nn[static_cast<std::size_t>(i)], best);
  }
}

// ---------------------------------------------------------------------------
// reverse-mode ops against central differences

using ad::Tape;
using ad::Var;

template <typename Build>
void check_op(const RowMatrix& x0, Build build, double tol = 1e-6) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 1);
  Tape probe;
  const Var out0 = build(probe, probe.leaf(x0));
  RowMatrix seed(probe.value(out0).rows(), probe.value(out0).cols());
  for (Eigen::Index i = 0; i < seed.size(); ++i) seed.data()[i] = n(rng);

  auto f = [&](const RowMatrix& x) {
    Tape t;
    const Var o = build(t, t.leaf(x));
    return (t.value(o).array() * seed.array()).sum();
  };
  Tape t;
  const Var in = t.leaf(x0);
  const Var o = build(t, in);
  t.accumulate(o, seed);
  t.backward();
  const RowMatrix g = t.grad(in);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    RowMatrix xp = x0, xm = x0;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    EXPECT_NEAR(g.data()[i], (f(xp) - f(xm)) / (2 * h), tol) << "entry " << i;
  }
}

RowMatrix rnd(int r, int c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TEST(Autodiff, Affine) {
  const RowMatrix w = rnd(4, 3, 1), b = rnd(1, 3, 2);
  check_op(rnd(5, 4, 3), [&](Tape& t, Var x) { return t.affine(x, t.constant(w), t.constant(b)); });
  const RowMatrix x = rnd(5, 4, 4);
  check_op(w, [&](Tape& t, Var wv) { return t.affine(t.constant(x), wv, t.constant(b)); });
  check_op(b, [&](Tape& t, Var bv) { return t.affine(t.constant(x), t.constant(w), bv); });
}

TEST(Autodiff, ReluGatherConcat) {
  check_op(rnd(6, 3, 5), [](Tape& t, Var x) { return t.relu(x); });
  check_op(rnd(6, 3, 6), [](Tape& t, Var x) { return t.gather_rows(x, {5, 0, 0, 2}); });
  const RowMatrix other = rnd(6, 2, 7);
  check_op(rnd(6, 3, 8), [&](Tape& t, Var x) { return t.concat_cols(t.constant(other), x); });
}

TEST(Autodiff, GroupMaxSoftmaxWeightedGather) {
  check_op(rnd(8, 3, 9), [](Tape& t, Var x) { return t.group_max(x, 4); });
  check_op(rnd(5, 6, 10), [](Tape& t, Var x) { return t.softmax_rows(x); });
  Eigen::MatrixXi idx(3, 2);
  idx << 0, 4, 1, 1, 3, 2;
  RowMatrix w(3, 2);
  w << 0.25, 0.75, 0.5, 0.5, 1.0, 0.0;
  check_op(rnd(5, 2, 11), [&](Tape& t, Var x) { return t.weighted_gather(x, idx, w); });
}

TEST(Autodiff, ReluSubgradientAtZeroIsZero) {
  Tape t;
  RowMatrix x(1, 2);
  x << 0.0, 1.0;
  const Var in = t.leaf(x);
  const Var o = t.relu(in);
  t.accumulate(o, RowMatrix::Ones(1, 2));
  t.backward();
  EXPECT_EQ(t.grad(in)(0, 0), 0.0);
  EXPECT_EQ(t.grad(in)(0, 1), 1.0);
}

TEST(Autodiff, StructureDigestTracksBranches) {
  auto digest = [](const RowMatrix& x) {
    Tape t;
    t.group_max(t.relu(t.leaf(x)), 2);
    return t.structure();
  };
  RowMatrix a(2, 1), b(2, 1);
  a << 1.0, 2.0;
  b << 2.0, 1.0;
  EXPECT_EQ(digest(a), digest(a * 1.5));
  EXPECT_NE(digest(a), digest(b));
}

}  // namespace
}  // namespace strata
