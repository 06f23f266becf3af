#ifndef RDELAY_KERNEL_EQUIVALENCE_HPP
#define RDELAY_KERNEL_EQUIVALENCE_HPP

// Temporal delay kernels, the modal Dirichlet heat kernel, and the maps from
// a history on (-inf, 0] to initial data of the equivalent local system.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "rdelay/errors.hpp"
#include "rdelay/spectral_core.hpp"

namespace rdelay {

enum class KernelOrder { weak, strong };

inline const char* to_string(KernelOrder k) { return k == KernelOrder::weak ? "weak" : "strong"; }

struct KernelSpec {
  KernelOrder order = KernelOrder::weak;
  double tau = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelOrder o, double t) : order(o), tau(t) {
    if (!(t > 0.0)) throw DomainError("KernelSpec: tau must be positive");
  }
};

// Histories older than this many multiples of tau are dropped; the kernel
// tail beyond 40 tau is below e^-40.
inline constexpr double kHorizonInTaus = 40.0;

inline double history_horizon(const KernelSpec& k, double user_horizon = 0.0) {
  return std::max(kHorizonInTaus * k.tau, user_horizon);
}

// g_w(t) = e^{-t/tau}/tau,  g_s(t) = t e^{-t/tau}/tau^2.
inline double kernel_value(const KernelSpec& k, double t) {
  if (t < 0.0) throw DomainError("kernel_value: t must be >= 0");
  const double e = std::exp(-t / k.tau);
  return k.order == KernelOrder::weak ? e / k.tau : t * e / (k.tau * k.tau);
}

// History eta(x, s) for s <= 0; treated as zero before -horizon when
// horizon > 0. horizon = 0 means no cutoff.
struct HistoryFn {
  std::function<double(double x, double s)> eta;
  double horizon = 0.0;

  double operator()(double x, double s) const { return (horizon > 0.0 && s < -horizon) ? 0.0 : eta(x, s); }

  Vector on_grid(const Grid1D& grid, double s) const {
    return grid.sample([&](double x) { return (*this)(x, s); });
  }

  static HistoryFn zero(double horizon) {
    return {[](double, double) { return 0.0; }, horizon};
  }
};

// Truncated eigen-expansion of the discrete Dirichlet heat kernel,
//   G_h(t) f = sum_n e^{-d lambda_n t} <phi_n, f>_h phi_n.
// Eigenpairs of the discrete operator are known in closed form; modes are
// orthonormal in the h-weighted inner product.
class GreenExpansion {
public:
  GreenExpansion(const Grid1D& grid, int n_modes = -1)
      : grid_(grid), lambda_(n_modes < 0 ? grid.size() : n_modes),
        phi_(grid.size(), n_modes < 0 ? grid.size() : n_modes) {
    const int m = static_cast<int>(lambda_.size());
    if (m < 1 || m > grid.size())
      throw DomainError("GreenExpansion: mode count must lie in [1, n_interior]");
    const double L = grid.length();
    const double h = grid.spacing();
    const double norm = std::sqrt(2.0 / L);
    for (int k = 0; k < m; ++k) {
      const double s = std::sin((k + 1) * std::numbers::pi * h / (2.0 * L));
      lambda_[k] = 4.0 / (h * h) * s * s;
      for (int i = 0; i < grid.size(); ++i)
        phi_(i, k) = norm * std::sin((k + 1) * std::numbers::pi * grid.x(i) / L);
    }
  }

  const Grid1D& grid() const noexcept { return grid_; }
  int modes() const noexcept { return static_cast<int>(lambda_.size()); }
  const Vector& eigenvalues() const noexcept { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return phi_; }

  // <phi_n, f>_h for every retained mode.
  Vector project(const Vector& f) const { return grid_.spacing() * (phi_.transpose() * f); }

  Vector synthesize(const Vector& coeffs) const { return phi_ * coeffs; }

private:
  Grid1D grid_;
  Vector lambda_;
  Eigen::MatrixXd phi_;
};

inline Vector green_apply(const GreenExpansion& g, double d, double t, const Vector& f) {
  if (t < 0.0) throw DomainError("green_apply: t must be >= 0");
  Vector c = g.project(f);
  for (int k = 0; k < c.size(); ++k) c[k] *= std::exp(-d * g.eigenvalues()[k] * t);
  return g.synthesize(c);
}

using ScalarMap = std::function<double(double)>;

inline Vector apply_pointwise(const ScalarMap& H, const Vector& u) {
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = H(u[i]);
  return out;
}

namespace detail {

inline void check_quadrature_step(const KernelSpec& k, double step) {
  if (!(step > 0.0) || step > k.tau / 4.0)
    throw QuadratureStepError("history quadrature step must lie in (0, tau/4]");
}

// sum_j w_j K(-s_j) G(-s_j) H(eta(., s_j)) over s_j in [-T, 0], composite
// trapezoid; `weight` is the scalar temporal density evaluated at lag r = -s.
template <class Weight>
Vector history_quadrature(const GreenExpansion& g, double d, const ScalarMap& H,
                          const HistoryFn& eta, double horizon, double step, Weight&& weight) {
  const int steps = static_cast<int>(std::ceil(horizon / step - 1e-9));
  const double ds = horizon / steps;
  const Vector& lam = g.eigenvalues();
  Vector acc = Vector::Zero(g.modes());
  for (int j = 0; j <= steps; ++j) {
    const double r = j * ds;
    const double w = (j == 0 || j == steps ? 0.5 : 1.0) * ds * weight(r);
    if (w == 0.0) continue;
    const Vector c = g.project(apply_pointwise(H, eta.on_grid(g.grid(), -r)));
    for (int k = 0; k < g.modes(); ++k) acc[k] += w * std::exp(-d * lam[k] * r) * c[k];
  }
  return g.synthesize(acc);
}

} // namespace detail

// v(x,0) = (1/tau) int_{-inf}^0 G(-s) e^{s/tau} H(eta(., s)) ds.
inline Vector history_to_initial_weak(const GreenExpansion& g, double d, const KernelSpec& k,
                                      const ScalarMap& H, const HistoryFn& eta, double step) {
  if (k.order != KernelOrder::weak)
    throw DomainError("history_to_initial_weak: kernel must be weak");
  detail::check_quadrature_step(k, step);
  const double T = history_horizon(k, eta.horizon);
  return detail::history_quadrature(g, d, H, eta, T, step,
                                    [&](double r) { return std::exp(-r / k.tau) / k.tau; });
}

struct StrongInitialData {
  Vector v0;
  Vector w0;
};

// Both auxiliary fields of the three-component strong-kernel system:
// v(x,0) uses the weight -s e^{s/tau}/tau^2, w(x,0) the weight e^{s/tau}/tau.
inline StrongInitialData history_to_initial_strong(const GreenExpansion& g, double d,
                                                   const KernelSpec& k, const ScalarMap& H,
                                                   const HistoryFn& eta, double step) {
  if (k.order != KernelOrder::strong)
    throw DomainError("history_to_initial_strong: kernel must be strong");
  detail::check_quadrature_step(k, step);
  const double T = history_horizon(k, eta.horizon);
  const double tau = k.tau;
  return {
      detail::history_quadrature(g, d, H, eta, T, step,
                                 [&](double r) { return r * std::exp(-r / tau) / (tau * tau); }),
      detail::history_quadrature(g, d, H, eta, T, step,
                                 [&](double r) { return std::exp(-r / tau) / tau; })};
}

// u sampled at uniform spacing: u[j] lives at time t0 + j*dt.
struct SampledTrajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vector> u;

  double t_last() const { return t0 + dt * (static_cast<double>(u.size()) - 1.0); }
};

// (g ** H(u))(., t) by composite trapezoid over the stored samples in
// [t - horizon, t]. Independent of the auxiliary-field formulation; this is
// the oracle for the local-system equivalence.
inline Vector nonlocal_convolution(const GreenExpansion& g, double d, const KernelSpec& k,
                                   const ScalarMap& H, const SampledTrajectory& traj, double t,
                                   double user_horizon = 0.0) {
  const double T = history_horizon(k, user_horizon);
  if (traj.u.empty() || !(traj.dt > 0.0))
    throw InsufficientHistoryError("nonlocal_convolution: empty trajectory");
  const double last = traj.t_last();
  if (t > last + 1e-9 * traj.dt)
    throw InsufficientHistoryError("nonlocal_convolution: t lies beyond stored samples");
  const double jt_real = (t - traj.t0) / traj.dt;
  const long jt = std::lround(jt_real);
  if (std::abs(jt_real - jt) > 1e-6)
    throw DomainError("nonlocal_convolution: t is not on the sample lattice");
  const long lags = std::lround(T / traj.dt);
  if (jt - lags < 0)
    throw InsufficientHistoryError("nonlocal_convolution: stored history covers less than " +
                                   std::to_string(T) + " time units before t");

  const Vector& lam = g.eigenvalues();
  Vector acc = Vector::Zero(g.modes());
  for (long m = 0; m <= lags; ++m) {
    const double r = m * traj.dt;
    const double w = (m == 0 || m == lags ? 0.5 : 1.0) * traj.dt * kernel_value(k, r);
    if (w == 0.0) continue;
    const Vector c = g.project(apply_pointwise(H, traj.u[static_cast<std::size_t>(jt - m)]));
    for (int n = 0; n < g.modes(); ++n) acc[n] += w * std::exp(-d * lam[n] * r) * c[n];
  }
  return g.synthesize(acc);
}

} // namespace rdelay

#endif
