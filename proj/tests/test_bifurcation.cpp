#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rdelay/bifurcation.hpp"

using namespace rdelay;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> tau_grid() {
  std::vector<double> t;
  for (int i = 1; i <= 50; ++i) t.push_back(0.1 * i);
  return t;
}
} // namespace

TEST(GrowthRate, IsEigenvalueOfLinearisation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0), P(0.05, 5.0);
  int checked = 0;
  while (checked < 200) {
    const double a = U(rng), b = U(rng), k = P(rng), tau = P(rng);
    if (a + b * k <= 0.05) continue;
    const double mu = principal_growth_rate(a, b, k, tau);
    const double M = eigenvector_ratio(a, b, k, tau);
    EXPECT_GT(mu, 0.0);
    EXPECT_NEAR((a - mu) * (-1.0 / tau - mu) - b * k / tau, 0.0, 1e-10 * (1 + mu * mu));
    EXPECT_NEAR(a + b * M, mu, 1e-10 * (1 + mu));
    EXPECT_NEAR(k / tau - M / tau, mu * M, 1e-10 * (1 + mu / tau));
    ++checked;
  }
}

TEST(GrowthRate, RequiresPositiveNetGrowth) {
  EXPECT_THROW(principal_growth_rate(-1.0, 0.5, 1.0, 1.0), AssumptionError);
  EXPECT_THROW(principal_growth_rate(1.0, 0.0, 1.0, 0.0), DomainError);
}

TEST(BifSummary, NicholsonCriticalDiffusion) {
  Grid1D g(kPi, 200);
  const BifSummary s = bif_summary(ModelSpec::nicholson(0.8, 1.0, 0.6), 0.5, g);
  EXPECT_NEAR(s.d_star, 0.1362, 5e-5);
  EXPECT_NEAR(s.M, 0.93623, 1e-4);
  EXPECT_LT(s.d_prime0, 0.0);
  ASSERT_TRUE(s.d_star_star_star);
  EXPECT_NEAR(*s.d_star_star_star, s.d_star, 1e-12);
  ASSERT_TRUE(s.bounds);
  EXPECT_NEAR(s.bounds->u_max, 1.0 / (0.6 * std::numbers::e * 0.8), 1e-12);
}

TEST(BifSummary, LogisticThresholdAndDirection) {
  Grid1D g(kPi, 400);
  const BifSummary s = bif_summary(ModelSpec::logistic(1.0, 0.5, 0.4), 0.5, g);
  EXPECT_NEAR(s.d_star, 1.0 / s.lambda1, 1e-14);
  EXPECT_NEAR(s.d_star, 1.0, 1e-4);
  EXPECT_NEAR(s.M, 1.0 / 1.5, 1e-14);
  // p + 2 q M = -1.5333, int phi^3 / int phi^2 = 8 / (3 pi) for phi = sin.
  EXPECT_NEAR(s.sign_test, -1.0 - 0.8 / 1.5, 1e-12);
  EXPECT_NEAR(s.d_prime0, -1.5333333 * (8.0 / (3.0 * kPi)) / 2.0, 2e-4);
  ASSERT_TRUE(s.d_star_star);
  EXPECT_NEAR(*s.d_star_star, s.d_star, 1e-14);
  ASSERT_TRUE(s.bounds);
  EXPECT_DOUBLE_EQ(s.bounds->u_max, 2.0);
  EXPECT_NEAR(s.bounds->v_max, 2.0, 1e-12);
}

TEST(BifSummary, CubicDirectionFollowsBMversusA) {
  Grid1D g(kPi, 100);
  // M = 1/(kappa tau + 1) = 2/3 at tau = 0.5; sign_test = 2 kappa (A - B M).
  const BifSummary super = bif_summary(ModelSpec::logistic_cubic(1, 0.1, 2.0, 1), 0.5, g);
  EXPECT_LT(super.d_prime0, 0.0);
  const BifSummary sub = bif_summary(ModelSpec::logistic_cubic(1, 2.0, 0.4, 1), 0.5, g);
  EXPECT_GT(sub.d_prime0, 0.0);
  EXPECT_NEAR(sub.sign_test, 2.0 * (2.0 - 0.4 * 2.0 / 3.0), 1e-12);
}

TEST(BifSummary, DerivativeScalesWithEigenfunctionNormalisation) {
  Grid1D g(kPi, 100);
  const EigenPair e = principal_eigenpair(g);
  const ModelSpec m = ModelSpec::nicholson(0.8, 1.0, 0.6);
  const BifSummary a = bif_summary(m, 0.5, e.lambda, phi_moments(g, e.phi));
  const BifSummary b = bif_summary(m, 0.5, e.lambda, phi_moments(g, 2.0 * e.phi));
  EXPECT_NEAR(b.d_prime0, 2.0 * a.d_prime0, 1e-12);
}

TEST(Bounds, NicholsonVariantUsesBoundedH) {
  Grid1D g(kPi, 50);
  const BifSummary s = bif_summary(ModelSpec::nicholson_variant(0.8, 1.0, 0.6), 0.5, g);
  ASSERT_TRUE(s.bounds && s.K5 && s.H_star3);
  const double K5 = 1.0 / (0.6 * std::numbers::e);
  EXPECT_NEAR(s.bounds->v_max, K5, 1e-12);
  EXPECT_NEAR(s.bounds->u_max, K5 / 0.8, 1e-9);
}

TEST(Bounds, MaxOnInterval) {
  auto f = [](double x) { return x * std::exp(-0.6 * x); };
  EXPECT_NEAR(max_on_interval(f, 0.0, 10.0), 1.0 / (0.6 * std::numbers::e), 1e-14);
  EXPECT_NEAR(max_on_interval([](double x) { return x; }, 0.0, 3.0), 3.0, 0.0);
}

TEST(Nonexistence, Thresholds) {
  const double lam = 1.0;
  EXPECT_NEAR(nonexistence_threshold(ModelSpec::logistic(1.5, 0.5, 0.4), 0.5, lam), 1.5, 1e-14);
  const double dn = nonexistence_threshold(ModelSpec::nicholson(0.8, 1.0, 0.6), 0.5, lam);
  EXPECT_NEAR(dn, critical_diffusion(-0.8, 1.0, 1.0, 0.5, lam), 1e-12);
  // Monod dominance uses K2 = theta / A, equal to b, so d*** = d*.
  const ModelSpec mo = ModelSpec::monod(0.8, 1.5, 1.2);
  EXPECT_NEAR(nonexistence_threshold(mo, 0.7, lam),
              critical_diffusion(-0.8, 1.5 / 1.2, 1.0, 0.7, lam), 1e-12);
  // Cubic: K0 = kappa (1 + A^2/(4C)) exceeds d* lambda1 = kappa.
  EXPECT_GT(nonexistence_threshold(ModelSpec::logistic_cubic(1, 2, 0.4, 1), 0.5, lam), 1.0);
}

TEST(DStarCurve, MonotonicityClasses) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(0.5, 2.0), pos(0.1, 2.0), u01(0.0, 1.0);
  const auto taus = tau_grid();
  const double lam = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int cls = trial % 4;
    // Draws keep |b k| <= 2.8: the tau -> 0 deviation is about (b k)^2 tau.
    double a = 0, b = 0;
    const double k = pos(rng);
    if (cls == 0) a = mag(rng), b = 0.0;                          // constant
    if (cls == 1) a = -mag(rng), b = (-a + 0.1 + 0.7 * u01(rng)) / k;  // a < 0, a + b k > 0
    if (cls == 2) a = mag(rng), b = (0.05 + 2.45 * u01(rng)) / k;      // a > 0, b > 0
    if (cls == 3) a = mag(rng), b = -0.9 * a * u01(rng) / k;          // a > 0, b < 0
    const DStarCurve c = dstar_curve(Coefficients{a, b, k}, taus, lam);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      const double prev = c.points[i - 1].second, cur = c.points[i].second;
      if (cls == 0) EXPECT_NEAR(cur, prev, 1e-12 * std::abs(prev));
      if (cls == 1 || cls == 2) EXPECT_LT(cur, prev);
      if (cls == 3) EXPECT_GT(cur, prev);
    }
    EXPECT_NEAR(critical_diffusion(a, b, k, 1e-4, lam), c.limit_tau_to_zero, 1e-3);
    EXPECT_NEAR(critical_diffusion(a, b, k, 1e4, lam), c.limit_tau_to_infinity, 1e-3);
  }
}

TEST(DStarCurve, SmallTauIsWellConditioned) {
  // The rationalised form keeps full precision as tau -> 0.
  const double d = critical_diffusion(1.0, 0.5, 1.0, 1e-12, 1.0);
  EXPECT_NEAR(d, 1.5, 1e-10);
}
