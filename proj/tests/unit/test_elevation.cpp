#include "helpers.hpp"

#include "strata/elevation.hpp"
#include "strata/error.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace strata {
namespace {

TEST(Gamma, LogGammaMatchesStd) {
  for (double x : {0.01, 0.5, 1.0, 1.5, 2.0, 7.3, 50.0, 170.5}) EXPECT_NEAR(log_gamma(x), std::lgamma(x), 1e-12 * std::max(1.0, std::abs(std::lgamma(x)))) << x;
  EXPECT_THROW(log_gamma(0.0), ConfigError);
}

TEST(Gamma, LogPdfExamples) {
  EXPECT_NEAR(gamma_log_pdf(1.0, 1.0, 1.0), -1.0, 1e-14);
  EXPECT_NEAR(gamma_log_pdf(1.0, 2.0, 1.0), -1.0, 1e-14);
  EXPECT_THROW(gamma_log_pdf(0.0, 1.0, 1.0), ConfigError);
  EXPECT_THROW(gamma_log_pdf(1.0, -1.0, 1.0), ConfigError);
}

TEST(Gamma, PdfIntegratesToOne) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> uk(0.8, 6.0), ut(0.1, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double k = uk(rng), t = ut(rng);
    const double hi = 50.0 * k * t;
    const int n = 200000;
    const double h = hi / n;
    double s = 0;
    for (int i = 0; i < n; ++i) s += std::exp(gamma_log_pdf((i + 0.5) * h, k, t)) * h;  // midpoint rule
    EXPECT_NEAR(s, 1.0, 1e-4) << "k=" << k << " theta=" << t;
  }
}

std::vector<double> mixture_sample(std::mt19937_64& rng, int n, double pi, double k1, double t1, double k2,
                                   double t2) {
  std::gamma_distribution<double> g1(k1, t1), g2(k2, t2);
  std::bernoulli_distribution pick(pi);
  std::vector<double> z;
  for (int i = 0; i < n; ++i) z.push_back(pick(rng) ? g1(rng) : g2(rng));
  return z;
}

TEST(Ecm, RecoversTwoComponentMixture) {
  std::mt19937_64 rng(52);
  const auto z = mixture_sample(rng, 20000, 0.4, 2, 0.25, 4, 3);
  const auto m = ecm_fit(z, default_init(z));
  EXPECT_NEAR(m.weight_lower, 0.4, 0.04);
  EXPECT_NEAR(m.lower.shape, 2, 0.2);
  EXPECT_NEAR(m.lower.scale, 0.25, 0.025);
  EXPECT_NEAR(m.higher.shape, 4, 0.4);
  EXPECT_NEAR(m.higher.scale, 3, 0.3);
  for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i)
    EXPECT_GE(m.log_likelihood_trace[i], m.log_likelihood_trace[i - 1] - 1e-9 * std::abs(m.log_likelihood_trace[i]));
}

TEST(Ecm, IdenticalInitStaysSymmetric) {
  std::mt19937_64 rng(53);
  std::gamma_distribution<double> g(3.0, 1.5);
  std::vector<double> z;
  for (int i = 0; i < 5000; ++i) z.push_back(g(rng));
  GammaMixture init;
  init.lower = {2.0, 2.0};
  init.higher = {2.0, 2.0};
  init.weight_lower = 0.3;
  const auto m = ecm_fit(z, init);
  EXPECT_NEAR(m.weight_lower, 0.3, 1e-9);
  EXPECT_NEAR(m.lower.shape, m.higher.shape, 1e-9);
  // single-Gamma MLE: ln k - digamma(k) = ln(mean) - mean(ln z)
  double mean = 0, mlog = 0;
  for (double v : z) {
    mean += v;
    mlog += std::log(v);
  }
  mean /= static_cast<double>(z.size());
  mlog /= static_cast<double>(z.size());
  const double s = std::log(mean) - mlog;
  double lo = 1e-3, hi = 1e3;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    (std::log(mid) - boost::math::digamma(mid) > s ? lo : hi) = mid;
  }
  EXPECT_NEAR(m.lower.shape, lo, 1e-3 * lo);
  EXPECT_NEAR(m.lower.scale, mean / lo, 1e-3 * mean / lo);
}

TEST(Ecm, MonotoneOnArbitraryInput) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 5; ++trial) {
    std::uniform_real_distribution<double> u(0.02, 20.0);
    std::vector<double> z;
    for (int i = 0; i < 500; ++i) z.push_back(u(rng) * u(rng) / 20.0 + 0.011);
    const auto m = ecm_fit(z, default_init(z));
    for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i)
      EXPECT_GE(m.log_likelihood_trace[i], m.log_likelihood_trace[i - 1] - 1e-9 * std::abs(m.log_likelihood_trace[i]));
    EXPECT_LE(m.lower.mean(), m.higher.mean());
    EXPECT_NO_THROW(m.validate());
  }
}

TEST(Ecm, Errors) {
  std::vector<double> few(50, 1.0);
  EXPECT_THROW(ecm_fit(few, GammaMixture{}), ConfigError);
  std::vector<double> same(500, 2.0);
  EXPECT_THROW(ecm_fit(same, GammaMixture{}), NumericError);
  std::vector<double> ground(5000, 0.005);
  EXPECT_THROW(ecm_fit(ground, GammaMixture{}), ConfigError);
}

TEST(Ecm, Deterministic) {
  std::mt19937_64 rng(55);
  const auto z = mixture_sample(rng, 3000, 0.5, 1.5, 0.2, 3, 4);
  const auto a = ecm_fit(z, default_init(z)), b = ecm_fit(z, default_init(z));
  EXPECT_EQ(a.lower.shape, b.lower.shape);
  EXPECT_EQ(a.log_likelihood_trace, b.log_likelihood_trace);
}

TEST(DefaultInit, FractionAndFallback) {
  std::vector<double> z{0.2, 0.5, 0.9, 1.5, 3.0, 4.0, 5.0, 6.0};
  const auto m = default_init(z);
  EXPECT_DOUBLE_EQ(m.weight_lower, 3.0 / 8.0);
  EXPECT_LT(m.lower.mean(), 1.0);
  EXPECT_GE(m.higher.mean(), 2.0);
  const auto low = default_init(std::vector<double>{0.2, 0.3, 0.4, 0.8});
  EXPECT_EQ(low.higher.shape, 3.0);
  EXPECT_EQ(low.higher.scale, 4.0);
}

TEST(DefaultInit, BracketsTrueMeans) {
  std::mt19937_64 rng(56);
  const auto z = mixture_sample(rng, 10000, 0.5, 2, 0.2, 6, 2);
  const auto m = default_init(z);
  EXPECT_LT(m.lower.mean(), 12.0);
  EXPECT_GT(m.higher.mean(), 0.4);
  EXPECT_LT(m.lower.mean(), m.higher.mean());
}

TEST(Mixture, FileRoundTrip) {
  std::mt19937_64 rng(57);
  const auto z = mixture_sample(rng, 2000, 0.5, 1.5, 0.2, 3, 4);
  const auto m = ecm_fit(z, default_init(z));
  const auto dir = test::temp_dir("mixture");
  write_mixture(m, dir / "m.mixture");
  const auto back = read_mixture(dir / "m.mixture");
  EXPECT_EQ(back.weight_lower, m.weight_lower);
  EXPECT_EQ(back.lower.shape, m.lower.shape);
  EXPECT_EQ(back.higher.scale, m.higher.scale);
  EXPECT_TRUE(back.fitted);
}

}  // namespace
}  // namespace strata
