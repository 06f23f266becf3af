#ifndef RDELAY_BIFURCATION_HPP
#define RDELAY_BIFURCATION_HPP

// Closed-form bifurcation data of the steady system
//   d u'' + F(u,v) = 0,  d v'' + (H(u) - v)/tau = 0,  Dirichlet on (0, L),
// plus the a priori bounds and nonexistence thresholds.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rdelay/errors.hpp"
#include "rdelay/model_catalog.hpp"
#include "rdelay/spectral_core.hpp"

namespace rdelay {

// Positive eigenvalue mu1 of A = [[a, b], [k/tau, -1/tau]].
inline double principal_growth_rate(double a, double b, double k, double tau) {
  if (!(a + b * k > 0.0)) throw AssumptionError("a + b k must be positive");
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const double root = std::sqrt((a * tau + 1.0) * (a * tau + 1.0) + 4.0 * b * tau * k);
  // The textbook form (a tau - 1 + root)/(2 tau) cancels badly for small
  // tau; the rationalised form is algebraically identical.
  return 2.0 * (a + b * k) / (1.0 - a * tau + root);
}

inline double critical_diffusion(double a, double b, double k, double tau, double lambda1) {
  return principal_growth_rate(a, b, k, tau) / lambda1;
}

// v/u ratio of the eigenvector (1, M) of A for mu1.
inline double eigenvector_ratio(double a, double b, double k, double tau) {
  const double root = std::sqrt((a * tau + 1.0) * (a * tau + 1.0) + 4.0 * b * tau * k);
  return 2.0 * k / (a * tau + 1.0 + root);
}

// Integrals of phi1^3 and phi1^2 under the chosen eigenfunction scaling.
struct PhiMoments {
  double cubic = 0.0;
  double square = 0.0;
};

inline PhiMoments phi_moments(const Grid1D& grid, const Vector& phi) {
  return {integrate(grid, phi.array().cube().matrix()), integrate(grid, phi.array().square().matrix())};
}

struct AprioriBounds {
  double u_max = 0.0;
  double v_max = 0.0;
};

struct BifSummary {
  double tau = 0.0;
  double lambda1 = 0.0;
  double mu1 = 0.0;
  double d_star = 0.0;
  double M = 0.0;
  // Branch direction d'(0) with phi1 scaled to max-norm 1. Only its sign is
  // independent of that scaling.
  double d_prime0 = 0.0;
  double sign_test = 0.0; // k (p + 2 q M + r M^2) + M b l
  std::optional<double> d_star_star;      // K0 / lambda1
  std::optional<double> d_star_star_star; // linear-dominance threshold
  std::optional<double> u_star, H_star;               // growth-bound case
  std::optional<double> K4_over_K1, H_star2;          // dominance + bounded F2
  std::optional<double> H_star3, K5;                  // dominance + bounded H
  std::optional<AprioriBounds> bounds;
};

// max of f on [lo, hi]: dense sampling refined by golden-section search
// around the best sample.
template <class Fn> double max_on_interval(Fn&& f, double lo, double hi, int samples = 2001) {
  double best_x = lo, best = f(lo);
  const double step = (hi - lo) / (samples - 1);
  for (int i = 1; i < samples; ++i) {
    const double x = lo + i * step;
    const double fx = f(x);
    if (fx > best) best = fx, best_x = x;
  }
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100 && b - a > 1e-15 * (1.0 + std::abs(best_x)); ++it) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

inline AprioriBounds fill_bounds(const ModelSpec& model, const Assumptions& as, BifSummary& s) {
  const Coefficients c = model.coefficients();
  auto H = [&](double u) { return model.H(u); };
  if (c.a > 0.0 && as.A4) {
    s.u_star = as.A4->u_star;
    s.H_star = max_on_interval(H, 0.0, *s.u_star);
    return {*s.u_star, *s.H_star};
  }
  if (c.a < 0.0 && as.A5) {
    if (as.A6a) {
      s.K4_over_K1 = *as.A6a / as.A5->K1;
      s.H_star2 = max_on_interval(H, 0.0, *s.K4_over_K1);
      return {*s.K4_over_K1, *s.H_star2};
    }
    if (as.A6b) {
      s.K5 = *as.A6b;
      s.H_star3 = max_on_interval(as.A5->F2, 0.0, *s.K5) / as.A5->K1;
      return {*s.H_star3, *s.K5};
    }
  }
  throw AssumptionError("no a priori bound available for model " + model.name());
}

inline double linear_dominance_threshold(double K1, double K2, double K3, double tau,
                                         double lambda1) {
  const double root = std::sqrt((-K1 * tau + 1.0) * (-K1 * tau + 1.0) + 4.0 * tau * K2 * K3);
  return (-K1 * tau - 1.0 + root) / (2.0 * lambda1 * tau);
}

// d** = K0/lambda1 when a > 0 (growth bound), d*** when a < 0 (dominance).
inline double nonexistence_threshold(const ModelSpec& model, double tau, double lambda1) {
  const Coefficients c = model.coefficients();
  const Assumptions as = model.assumptions();
  if (c.a > 0.0) {
    if (!as.A4) throw AssumptionError(model.name() + ": a > 0 but no growth bound witness");
    return as.A4->K0 / lambda1;
  }
  if (c.a < 0.0) {
    if (!as.A5) throw AssumptionError(model.name() + ": a < 0 but no dominance witness");
    return linear_dominance_threshold(as.A5->K1, as.A5->K2, as.A5->K3, tau, lambda1);
  }
  throw AssumptionError(model.name() + ": a = 0 is not covered");
}

inline BifSummary bif_summary(const ModelSpec& model, double tau, double lambda1,
                              const PhiMoments& moments) {
  const Coefficients c = model.coefficients();
  if (!(c.a + c.b * c.k > 0.0))
    throw AssumptionError(model.name() + ": a + b k <= 0, no positive bifurcation point");
  BifSummary s;
  s.tau = tau;
  s.lambda1 = lambda1;
  s.mu1 = principal_growth_rate(c.a, c.b, c.k, tau);
  s.d_star = s.mu1 / lambda1;
  s.M = eigenvector_ratio(c.a, c.b, c.k, tau);
  s.sign_test = c.k * (c.p + 2.0 * c.q * s.M + c.r * s.M * s.M) + s.M * c.b * c.l;
  s.d_prime0 = s.sign_test * moments.cubic /
               (2.0 * lambda1 * (c.k + s.M * s.M * c.b * tau) * moments.square);

  const Assumptions as = model.assumptions();
  if (c.a > 0.0 && as.A4) s.d_star_star = as.A4->K0 / lambda1;
  if (c.a < 0.0 && as.A5)
    s.d_star_star_star = linear_dominance_threshold(as.A5->K1, as.A5->K2, as.A5->K3, tau, lambda1);
  try {
    s.bounds = fill_bounds(model, as, s);
  } catch (const AssumptionError&) {
  }
  return s;
}

inline BifSummary bif_summary(const ModelSpec& model, double tau, const Grid1D& grid,
                              const EigenPair& principal) {
  return bif_summary(model, tau, principal.lambda, phi_moments(grid, principal.phi));
}

inline BifSummary bif_summary(const ModelSpec& model, double tau, const Grid1D& grid) {
  return bif_summary(model, tau, grid, principal_eigenpair(grid));
}

struct DStarCurve {
  std::vector<std::pair<double, double>> points; // (tau, d*)
  double limit_tau_to_zero = 0.0;                 // (a + b k)/lambda1
  double limit_tau_to_infinity = 0.0;             // (a + |a|)/(2 lambda1)
};

inline DStarCurve dstar_curve(const Coefficients& c, const std::vector<double>& tau_grid,
                              double lambda1) {
  DStarCurve out;
  out.points.reserve(tau_grid.size());
  for (double t : tau_grid) out.points.emplace_back(t, critical_diffusion(c.a, c.b, c.k, t, lambda1));
  out.limit_tau_to_zero = (c.a + c.b * c.k) / lambda1;
  out.limit_tau_to_infinity = (c.a + std::abs(c.a)) / (2.0 * lambda1);
  return out;
}

inline DStarCurve dstar_curve(const ModelSpec& model, const std::vector<double>& tau_grid,
                              double lambda1) {
  return dstar_curve(model.coefficients(), tau_grid, lambda1);
}

} // namespace rdelay

#endif
