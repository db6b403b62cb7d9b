#include "helpers.hpp"

#include "strata/cylinder.hpp"
#include "strata/elevation.hpp"
#include "strata/error.hpp"
#include "strata/losses.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace strata {
namespace {

constexpr Eigen::Index kG = class_index(ClassId::Ground), kV = class_index(ClassId::GroundVegetation),
                       kU = class_index(ClassId::Understory), kS = class_index(ClassId::Stem),
                       kD = class_index(ClassId::Deciduous), kC = class_index(ClassId::Coniferous);

RowMatrix random_probs(std::mt19937_64& rng, Eigen::Index m) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  RowMatrix p(m, kNumClasses);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int c = 0; c < kNumClasses; ++c) p(i, c) = u(rng);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

RasterGeometry grid_geom(int rows, int cols, double px = 0.5) {
  RasterGeometry g;
  g.pixel_size = px;
  g.rows = rows;
  g.cols = cols;
  return g;
}

TEST(Loss3d, Examples) {
  RowMatrix p = RowMatrix::Zero(1, kNumClasses);
  p(0, kS) = 1.0;
  const std::vector<Label> stem{ClassId::Stem};
  EXPECT_EQ(loss_3d(p, stem).value, 0.0);
  const RowMatrix uni = RowMatrix::Constant(1, kNumClasses, 1.0 / 6.0);
  EXPECT_NEAR(loss_3d(uni, stem).value, std::log(6.0), 1e-12);
  EXPECT_NEAR(loss_3d(uni, stem).value, 1.7918, 1e-4);
}

TEST(Loss3d, MixedBatchMatchesDirectRecomputation) {
  std::mt19937_64 rng(41);
  const RowMatrix p = random_probs(rng, 50);
  std::vector<Label> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(label_from_id(static_cast<int>(rng() % 7) - 1));
  double sum = 0;
  int n = 0;
  for (int i = 0; i < 50; ++i) {
    const auto& l = labels[static_cast<std::size_t>(i)];
    if (!l || *l == ClassId::GroundVegetation) continue;
    sum += -std::log(p(i, class_index(*l)));
    ++n;
  }
  const LossTerm t = loss_3d(p, labels);
  EXPECT_NEAR(t.value, sum / n, 1e-12);
  for (int i = 0; i < 50; ++i) {
    const auto& l = labels[static_cast<std::size_t>(i)];
    for (int c = 0; c < kNumClasses; ++c) {
      const bool sup = l && *l != ClassId::GroundVegetation && class_index(*l) == c;
      EXPECT_NEAR(t.grad(i, c), sup ? -1.0 / (n * p(i, c)) : 0.0, 1e-12);
    }
  }
}

TEST(Loss3d, NothingSupervisedIsZero) {
  std::mt19937_64 rng(42);
  const RowMatrix p = random_probs(rng, 3);
  const std::vector<Label> l{std::nullopt, ClassId::GroundVegetation, std::nullopt};
  EXPECT_EQ(loss_3d(p, l).value, 0.0);
  Loss3dOptions o;
  o.supervise_gv = true;
  EXPECT_NEAR(loss_3d(p, l, o).value, -std::log(p(1, kV)), 1e-12);
}

TEST(Loss3d, ClampedAtZeroProbability) {
  RowMatrix p = RowMatrix::Zero(1, kNumClasses);
  p(0, kG) = 1.0;
  const double v = loss_3d(p, std::vector<Label>{ClassId::Stem}).value;
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -std::log(kLogClamp), 1e-9);
}

TEST(ProjectSoft, Examples) {
  const auto g = grid_geom(1, 1);
  RowMatrix p = RowMatrix::Zero(1, kNumClasses);
  p(0, kD) = 0.5;
  p(0, kC) = 0.3;
  p(0, kG) = 0.2;
  const std::vector<Vec2> xy{{0.25, 0.25}};
  EXPECT_DOUBLE_EQ(project_soft(p, xy, g)[Layer::Overstory].at(0, 0), 0.8);

  RowMatrix q = RowMatrix::Zero(2, kNumClasses);
  q(0, kV) = 0.2;
  q(1, kV) = 0.7;
  const std::vector<Vec2> two{{0.1, 0.1}, {0.4, 0.4}};
  const auto occ = project_soft(q, two, g);
  EXPECT_EQ(occ[Layer::GroundVegetation].at(0, 0), 0.7);
  EXPECT_EQ(occ.argmax[0].at(0, 0), 1);
}

TEST(ProjectSoft, MatchesExhaustiveScan) {
  std::mt19937_64 rng(43);
  const auto g = grid_geom(6, 7);
  std::uniform_real_distribution<double> ux(0, 3.5), uy(0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 60;
    const RowMatrix p = random_probs(rng, m);
    std::vector<Vec2> xy;
    for (int i = 0; i < m; ++i) xy.push_back({ux(rng), uy(rng)});
    const auto occ = project_soft(p, xy, g);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        bool any = false;
        double mg = -1, mu = -1, mo = -1;
        for (int i = 0; i < m; ++i) {
          const double lx = c * 0.5, ly = r * 0.5;
          const auto& q = xy[static_cast<std::size_t>(i)];
          const bool in = q.x >= lx && (q.x < lx + 0.5 || c == g.cols - 1) && q.y >= ly &&
                          (q.y < ly + 0.5 || r == g.rows - 1);
          if (!in) continue;
          any = true;
          mg = std::max(mg, p(i, kV));
          mu = std::max(mu, p(i, kU));
          mo = std::max(mo, p(i, kD) + p(i, kC));
        }
        ASSERT_EQ(occ.valid.at(r, c) != 0, any);
        if (!any) continue;
        EXPECT_EQ(occ[Layer::GroundVegetation].at(r, c), mg);
        EXPECT_EQ(occ[Layer::Understory].at(r, c), mu);
        EXPECT_EQ(occ[Layer::Overstory].at(r, c), mo);
      }
  }
}

TEST(ProjectSoft, MonotoneInProbabilities) {
  std::mt19937_64 rng(44);
  const auto g = grid_geom(4, 4);
  std::uniform_real_distribution<double> u(0, 2.0);
  RowMatrix p = random_probs(rng, 30);
  std::vector<Vec2> xy;
  for (int i = 0; i < 30; ++i) xy.push_back({u(rng), u(rng)});
  const auto a = project_soft(p, xy, g);
  p(7, kU) += 0.3;
  const auto b = project_soft(p, xy, g);
  for (std::size_t i = 0; i < a.occupancy[1].cells().size(); ++i)
    EXPECT_GE(b.occupancy[1].cells()[i], a.occupancy[1].cells()[i]);
}

TEST(ProjectSoft, RestrictToDisk) {
  const auto g = grid_geom(4, 4);
  RowMatrix p = RowMatrix::Constant(16, kNumClasses, 1.0 / 6);
  std::vector<Vec2> xy;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) xy.push_back({c * 0.5 + 0.25, r * 0.5 + 0.25});
  auto occ = project_soft(p, xy, g);
  restrict_to_disk(occ, {1.0, 1.0}, 0.5);
  int valid = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double dx = c * 0.5 + 0.25 - 1.0, dy = r * 0.5 + 0.25 - 1.0;
      EXPECT_EQ(occ.valid.at(r, c) != 0, dx * dx + dy * dy <= 0.25);
      valid += occ.valid.at(r, c);
    }
  EXPECT_EQ(valid, 4);
}

LayerTruth uniform_truth(const RasterGeometry& g, Cell c) {
  LayerTruth t;
  for (auto& l : t.layers) l = TriStateRaster(g, c);
  return t;
}

SoftOccupancy uniform_occ(const RasterGeometry& g, double v) {
  SoftOccupancy o;
  o.geometry = g;
  for (int l = 0; l < 3; ++l) {
    o.occupancy[static_cast<std::size_t>(l)] = Grid<double>(g, v);
    o.argmax[static_cast<std::size_t>(l)] = Grid<int>(g, 0);
  }
  o.valid = Grid<std::uint8_t>(g, 1);
  return o;
}

TEST(Loss2d, Examples) {
  const auto g = grid_geom(2, 2);
  EXPECT_NEAR(loss_2d(uniform_occ(g, 1.0), uniform_truth(g, Cell::Full)).value, 0.0, 1e-6);
  EXPECT_NEAR(loss_2d(uniform_occ(g, 0.5), uniform_truth(g, Cell::Full)).value, std::log(2.0), 1e-12);
  EXPECT_NEAR(loss_2d(uniform_occ(g, 0.5), uniform_truth(g, Cell::Empty)).value, std::log(2.0), 1e-12);
  const auto none = loss_2d(uniform_occ(g, 0.3), uniform_truth(g, Cell::NoData));
  EXPECT_EQ(none.value, 0.0);
  EXPECT_EQ(none.pixels, 0u);
}

TEST(Loss2d, NoDataAndInvalidPixelsIgnored) {
  const auto g = grid_geom(2, 2);
  auto truth = uniform_truth(g, Cell::Full);
  truth[Layer::Understory].at(1, 1) = Cell::NoData;
  auto occ = uniform_occ(g, 0.6);
  const double base = loss_2d(occ, truth).value;
  occ.occupancy[1].at(1, 1) = 0.01;
  EXPECT_EQ(loss_2d(occ, truth).value, base);
  occ.valid.at(0, 0) = 0;
  occ.occupancy[0].at(0, 0) = 0.99;
  occ.occupancy[2].at(0, 0) = 0.99;
  const auto l = loss_2d(occ, truth);
  EXPECT_EQ(l.pixels, 12u - 1u - 3u);
  EXPECT_NEAR(l.value, -std::log(0.6), 1e-12);
}

TEST(Loss2d, PooledMeanAndGradient) {
  std::mt19937_64 rng(45);
  const auto g = grid_geom(3, 3);
  auto truth = uniform_truth(g, Cell::Empty);
  auto occ = uniform_occ(g, 0.5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int l = 0; l < 3; ++l)
    for (std::size_t i = 0; i < 9; ++i) {
      truth.layers[static_cast<std::size_t>(l)].cells()[i] = static_cast<Cell>(rng() % 3);
      occ.occupancy[static_cast<std::size_t>(l)].cells()[i] = u(rng);
    }
  double sum = 0;
  int n = 0;
  for (int l = 0; l < 3; ++l)
    for (std::size_t i = 0; i < 9; ++i) {
      const Cell c = truth.layers[static_cast<std::size_t>(l)].cells()[i];
      if (c == Cell::NoData) continue;
      const double o = occ.occupancy[static_cast<std::size_t>(l)].cells()[i];
      sum += c == Cell::Full ? -std::log(o) : -std::log(1 - o);
      ++n;
    }
  const auto res = loss_2d(occ, truth);
  EXPECT_NEAR(res.value, sum / n, 1e-12);
  const double h = 1e-7;
  for (int l = 0; l < 3; ++l)
    for (std::size_t i = 0; i < 9; ++i) {
      auto up = occ, dn = occ;
      up.occupancy[static_cast<std::size_t>(l)].cells()[i] += h;
      dn.occupancy[static_cast<std::size_t>(l)].cells()[i] -= h;
      const double fd = (loss_2d(up, truth).value - loss_2d(dn, truth).value) / (2 * h);
      EXPECT_NEAR(res.grad[static_cast<std::size_t>(l)].cells()[i], fd, 1e-6);
    }
}

TEST(ProjectSoftBackward, RoutesToArgmaxOnly) {
  std::mt19937_64 rng(46);
  const auto g = grid_geom(2, 2);
  std::uniform_real_distribution<double> u(0, 1.0);
  const RowMatrix p = random_probs(rng, 20);
  std::vector<Vec2> xy;
  for (int i = 0; i < 20; ++i) xy.push_back({u(rng), u(rng)});
  const auto occ = project_soft(p, xy, g);
  std::array<Grid<double>, 3> og;
  for (auto& x : og) x = Grid<double>(g, 0.0);
  og[2].at(0, 1) = 2.0;
  og[1].at(1, 0) = -1.0;
  const RowMatrix gp = project_soft_backward(occ, og, 20);
  for (int i = 0; i < 20; ++i)
    for (int c = 0; c < kNumClasses; ++c) {
      double expect = 0;
      if (occ.valid.at(0, 1) && occ.argmax[2].at(0, 1) == i && (c == kD || c == kC)) expect += 2.0;
      if (occ.valid.at(1, 0) && occ.argmax[1].at(1, 0) == i && c == kU) expect -= 1.0;
      EXPECT_EQ(gp(i, c), expect);
    }
}

GammaMixture mixture(double kl, double tl, double kh, double th) {
  GammaMixture m;
  m.lower = {kl, tl};
  m.higher = {kh, th};
  m.weight_lower = 0.5;
  m.fitted = true;
  return m;
}

double gamma_pdf(double z, double k, double theta) {
  return boost::math::pdf(boost::math::gamma_distribution<double>(k, theta), z);
}

TEST(LossElevation, SinglePointCollapse) {
  const auto m = mixture(1.5, 0.1, 3.0, 2.0);
  RowMatrix p = RowMatrix::Zero(1, kNumClasses);
  p(0, kG) = 1.0;
  const std::vector<double> z{0.3};
  EXPECT_NEAR(loss_elevation(p, z, m).value, -std::log(gamma_pdf(0.3, 1.5, 0.1)), 1e-10);
}

TEST(LossElevation, IdenticalComponentsIgnoreProbs) {
  const auto m = mixture(2.0, 1.0, 2.0, 1.0);
  std::mt19937_64 rng(47);
  const std::vector<double> z{0.5, 2.0, 7.0};
  const double a = loss_elevation(random_probs(rng, 3), z, m).value;
  const double b = loss_elevation(random_probs(rng, 3), z, m).value;
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(LossElevation, MatchesDirectFormulaAndGradient) {
  const auto m = mixture(1.2, 0.05, 2.5, 3.0);
  std::mt19937_64 rng(48);
  const RowMatrix p = random_probs(rng, 40);
  std::uniform_real_distribution<double> uz(0.0, 15.0);
  std::vector<double> z;
  for (int i = 0; i < 40; ++i) z.push_back(i == 0 ? 0.0 : uz(rng));
  auto direct = [&](const RowMatrix& q) {
    double s = 0;
    for (int i = 0; i < 40; ++i) {
      const double zf = std::max(z[static_cast<std::size_t>(i)], 0.01);
      const double a = (q(i, kG) + q(i, kV)) * gamma_pdf(zf, 1.2, 0.05) +
                       (q(i, kU) + q(i, kD) + q(i, kC) + q(i, kS)) * gamma_pdf(zf, 2.5, 3.0);
      s += -std::log(std::max(a, 1e-12));
    }
    return s / 40;
  };
  const auto t = loss_elevation(p, z, m);
  EXPECT_NEAR(t.value, direct(p), 1e-9);
  const double h = 1e-7;
  for (int i = 0; i < 40; i += 7)
    for (int c = 0; c < kNumClasses; ++c) {
      RowMatrix up = p, dn = p;
      up(i, c) += h;
      dn(i, c) -= h;
      EXPECT_NEAR(t.grad(i, c), (direct(up) - direct(dn)) / (2 * h), 1e-5 * std::max(1.0, std::abs(t.grad(i, c))));
    }
}

TEST(LossElevation, UnfittedMixtureRejected) {
  GammaMixture m = mixture(1, 1, 2, 2);
  m.fitted = false;
  EXPECT_THROW(loss_elevation(RowMatrix::Constant(1, 6, 1.0 / 6), std::vector<double>{1.0}, m), ConfigError);
}

TEST(TotalLoss, Combination) {
  EXPECT_NEAR(total_loss(1, 1, 1, LossWeights{}), 2.1, 1e-15);
  LossWeights w;
  w.lambda_2d = 0;
  EXPECT_EQ(total_loss(0.7, 5.0, 0.0, w), 0.7);
  w.mu_elev = -1;
  EXPECT_THROW(w.validate(), ConfigError);
}

}  // namespace
}  // namespace strata
