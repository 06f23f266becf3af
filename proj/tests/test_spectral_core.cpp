#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rdelay/spectral_core.hpp"

using namespace rdelay;

namespace {
constexpr double kPi = std::numbers::pi;

double closed_form_lambda1(const Grid1D& g) {
  const double s = std::sin(kPi * g.spacing() / (2.0 * g.length()));
  return 4.0 / (g.spacing() * g.spacing()) * s * s;
}
} // namespace

TEST(Grid1D, SpacingAndNodes) {
  Grid1D g(kPi, 99);
  EXPECT_DOUBLE_EQ(g.spacing(), kPi / 100.0);
  EXPECT_DOUBLE_EQ(g.x(0), kPi / 100.0);
  EXPECT_NEAR(g.x(98), kPi - kPi / 100.0, 1e-14);
  EXPECT_EQ(g.center_index(), 49);
}

TEST(Grid1D, RejectsBadInput) {
  EXPECT_THROW(Grid1D(0.0, 10), DomainError);
  EXPECT_THROW(Grid1D(-1.0, 10), DomainError);
  EXPECT_THROW(Grid1D(1.0, 2), DomainError);
}

TEST(Integrate, SineSquaredIsExactOnTheGrid) {
  Grid1D g(kPi, 37);
  const Vector s = g.sample([](double x) { return std::sin(x); });
  EXPECT_NEAR(integrate(g, s.array().square().matrix()), kPi / 2.0, 1e-13);
  EXPECT_NEAR(inner(g, s, s), kPi / 2.0, 1e-13);
}

TEST(Laplacian, ApplyMatchesDense) {
  Grid1D g(2.0, 17);
  const Laplacian lap = build_laplacian(g);
  Vector f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = std::cos(1.3 * i) + 0.1 * i;
  const Vector a = lap.apply(f);
  const Vector b = lap.dense() * f;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Laplacian, SecondOrderOnSmoothFunction) {
  // -u'' for u = sin(pi x / L) is (pi/L)^2 u; the error shrinks like h^2.
  double prev = 0.0;
  for (int n : {31, 63, 127}) {
    Grid1D g(kPi, n);
    const Vector u = g.sample([](double x) { return std::sin(x); });
    const double err = (build_laplacian(g).apply(u) - u).cwiseAbs().maxCoeff();
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.2);
    prev = err;
  }
}

TEST(ShiftedSolver, SolvesShiftedSystem) {
  Grid1D g(kPi, 64);
  const double d = 0.7, sigma = 2.5;
  Vector rhs(g.size());
  for (int i = 0; i < g.size(); ++i) rhs[i] = std::sin(0.3 * i) + 1.0;
  const Vector x = solve_shifted(g, d, sigma, rhs);
  const Vector back = d * build_laplacian(g).apply(x) + sigma * x;
  EXPECT_LT((back - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ShiftedSolver, ZeroOperatorIsSingular) {
  Grid1D g(1.0, 8);
  EXPECT_THROW(ShiftedSolver(g, 0.0, 0.0), SingularOperatorError);
}

TEST(ShiftedSolver, RhsSizeMismatch) {
  Grid1D g(1.0, 8);
  EXPECT_THROW(solve_shifted(g, 1.0, 1.0, Vector::Ones(5)), DomainError);
}

TEST(PrincipalEigenpair, MatchesClosedForm) {
  for (int n : {16, 100, 200}) {
    Grid1D g(kPi, n);
    const EigenPair e = principal_eigenpair(g);
    EXPECT_NEAR(e.lambda, closed_form_lambda1(g), 1e-12);
  }
}

TEST(PrincipalEigenpair, NormalisedPositiveAndSmallResidual) {
  Grid1D g(kPi, 200);
  const EigenPair e = principal_eigenpair(g);
  EXPECT_NEAR(e.phi.maxCoeff(), 1.0, 1e-14);
  EXPECT_GT(e.phi.minCoeff(), 0.0);
  const Vector r = build_laplacian(g).apply(e.phi) - e.lambda * e.phi;
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10);
  // Shape: sin(x) up to discretisation.
  const Vector s = g.sample([](double x) { return std::sin(x); });
  EXPECT_LT((e.phi / e.phi.maxCoeff() - s / s.maxCoeff()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PrincipalEigenpair, ConvergesToContinuumValue) {
  // lambda1 on (0, pi) is 1; the discrete value is below it by O(h^2).
  Grid1D g(kPi, 200);
  const double lam = principal_eigenpair(g).lambda;
  EXPECT_LT(lam, 1.0);
  EXPECT_NEAR(lam, 1.0, 1e-4);
  Grid1D g2(2.0, 200);
  EXPECT_NEAR(principal_eigenpair(g2).lambda, kPi * kPi / 4.0, 1e-3);
}

TEST(PrincipalEigenpair, IterationCap) {
  Grid1D g(kPi, 50);
  EigenIterationOptions opts;
  opts.max_iterations = 1;
  EXPECT_THROW(principal_eigenpair(g, opts), IterationError);
}
