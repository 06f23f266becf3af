#ifndef RDELAY_STEADY_STATE_HPP
#define RDELAY_STEADY_STATE_HPP

// Steady states of the local system: damped Newton, branch continuation in
// the diffusion rate, linearised stability and non-degeneracy, and a
// multi-start uniqueness probe.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdelay/bifurcation.hpp"
#include "rdelay/errors.hpp"
#include "rdelay/kernel_equivalence.hpp"
#include "rdelay/model_catalog.hpp"
#include "rdelay/parallel.hpp"
#include "rdelay/spectral_core.hpp"

namespace rdelay {

// (u, v) for the weak kernel, (u, v, w) for the strong kernel.
struct FieldState {
  Vector u;
  Vector v;
  std::optional<Vector> w;

  int components() const noexcept { return w ? 3 : 2; }
  KernelOrder kernel() const noexcept { return w ? KernelOrder::strong : KernelOrder::weak; }

  double max_abs() const {
    double m = std::max(u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff());
    if (w) m = std::max(m, w->cwiseAbs().maxCoeff());
    return m;
  }
  double min_entry() const {
    double m = std::min(u.minCoeff(), v.minCoeff());
    if (w) m = std::min(m, w->minCoeff());
    return m;
  }
  bool finite() const {
    return u.allFinite() && v.allFinite() && (!w || w->allFinite());
  }

  static FieldState zeros(int n, KernelOrder k = KernelOrder::weak) {
    FieldState s{Vector::Zero(n), Vector::Zero(n), std::nullopt};
    if (k == KernelOrder::strong) s.w = Vector::Zero(n);
    return s;
  }
};

inline double distance(const FieldState& a, const FieldState& b) {
  double m = std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
  if (a.w && b.w) m = std::max(m, (*a.w - *b.w).cwiseAbs().maxCoeff());
  return m;
}

struct NewtonOptions {
  double tolerance = 1e-10; // max-norm residual
  int max_iterations = 50;
  int max_halvings = 30;
  double negative_tolerance = 1e-6;
};

namespace detail {

// Unknowns are interleaved node by node: x[i*m + c], c = 0 (u), 1 (v), 2 (w).
inline Vector pack(const FieldState& s) {
  const int n = static_cast<int>(s.u.size());
  const int m = s.components();
  Vector x(n * m);
  for (int i = 0; i < n; ++i) {
    x[i * m] = s.u[i];
    x[i * m + 1] = s.v[i];
    if (m == 3) x[i * m + 2] = (*s.w)[i];
  }
  return x;
}

inline FieldState unpack(const Vector& x, int n, int m) {
  FieldState s{Vector(n), Vector(n), std::nullopt};
  if (m == 3) s.w = Vector(n);
  for (int i = 0; i < n; ++i) {
    s.u[i] = x[i * m];
    s.v[i] = x[i * m + 1];
    if (m == 3) (*s.w)[i] = x[i * m + 2];
  }
  return s;
}

// Discrete steady operator W(d; u, v[, w]) and its derivatives.
template <Reaction R> struct SteadySystem {
  const R& model;
  double d;
  double tau;
  const Grid1D& grid;
  int m; // 2 or 3 components

  int n() const { return grid.size(); }

  // Delta_h applied to each component of the packed vector.
  Vector laplace(const Vector& x) const {
    const double h2 = grid.spacing() * grid.spacing();
    const int N = n();
    Vector out(x.size());
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < m; ++c) {
        const double left = i > 0 ? x[(i - 1) * m + c] : 0.0;
        const double right = i + 1 < N ? x[(i + 1) * m + c] : 0.0;
        out[i * m + c] = (left - 2.0 * x[i * m + c] + right) / h2;
      }
    return out;
  }

  Vector residual(const Vector& x) const {
    Vector r = d * laplace(x);
    for (int i = 0; i < n(); ++i) {
      const double u = x[i * m], v = x[i * m + 1];
      r[i * m] += model.F(u, v);
      if (m == 2) {
        r[i * m + 1] += (model.H(u) - v) / tau;
      } else {
        const double w = x[i * m + 2];
        r[i * m + 1] += (w - v) / tau;
        r[i * m + 2] += (model.H(u) - w) / tau;
      }
    }
    return r;
  }

  void jacobian_triplets(const Vector& x, std::vector<Eigen::Triplet<double>>& t) const {
    const double h2 = grid.spacing() * grid.spacing();
    const int N = n();
    t.reserve(t.size() + static_cast<std::size_t>(N * m * 3 + N * 4));
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < m; ++c) {
        const int row = i * m + c;
        t.emplace_back(row, row, -2.0 * d / h2);
        if (i > 0) t.emplace_back(row, row - m, d / h2);
        if (i + 1 < N) t.emplace_back(row, row + m, d / h2);
      }
      const double u = x[i * m], v = x[i * m + 1];
      const int ru = i * m, rv = i * m + 1;
      t.emplace_back(ru, ru, model.F_u(u, v));
      t.emplace_back(ru, rv, model.F_v(u, v));
      if (m == 2) {
        t.emplace_back(rv, ru, model.H_u(u) / tau);
        t.emplace_back(rv, rv, -1.0 / tau);
      } else {
        const int rw = i * m + 2;
        t.emplace_back(rv, rv, -1.0 / tau);
        t.emplace_back(rv, rw, 1.0 / tau);
        t.emplace_back(rw, ru, model.H_u(u) / tau);
        t.emplace_back(rw, rw, -1.0 / tau);
      }
    }
  }

  Eigen::SparseMatrix<double> jacobian(const Vector& x) const {
    std::vector<Eigen::Triplet<double>> t;
    jacobian_triplets(x, t);
    Eigen::SparseMatrix<double> J(n() * m, n() * m);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }
};

// Damped Newton on G(y) = 0 with step halving on the max-norm residual.
template <class ResidualFn, class JacobianFn>
Vector damped_newton(Vector y, ResidualFn&& G, JacobianFn&& DG, const NewtonOptions& opts,
                     const char* who) {
  Vector r = G(y);
  double rn = r.cwiseAbs().maxCoeff();
  double best = rn;
  if (!std::isfinite(rn)) throw NoConvergenceError(std::string(who) + ": non-finite initial residual", rn);
  for (int it = 0; it < opts.max_iterations && rn > opts.tolerance; ++it) {
    Eigen::SparseMatrix<double> J = DG(y);
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw NoConvergenceError(std::string(who) + ": singular Jacobian", best);
    const Vector step = lu.solve(-r);
    if (!step.allFinite()) throw NoConvergenceError(std::string(who) + ": singular Jacobian", best);
    double lambda = 1.0;
    bool accepted = false;
    for (int hv = 0; hv <= opts.max_halvings; ++hv, lambda *= 0.5) {
      Vector trial = y + lambda * step;
      Vector rt = G(trial);
      const double tn = rt.cwiseAbs().maxCoeff();
      if (std::isfinite(tn) && tn < rn) {
        y = std::move(trial);
        r = std::move(rt);
        rn = tn;
        accepted = true;
        break;
      }
    }
    best = std::min(best, rn);
    if (!accepted) break;
  }
  if (!(rn <= opts.tolerance))
    throw NoConvergenceError(std::string(who) + ": residual " + std::to_string(best) +
                                 " above tolerance",
                             best);
  // One extra full step. Near a singular point the residual test is met
  // while the iterate is still ~tol/sigma_min away from the root; this is
  // what separates a tiny positive state from the trivial one.
  {
    Eigen::SparseMatrix<double> J = DG(y);
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() == Eigen::Success) {
      Vector trial = y + lu.solve(-r);
      if (trial.allFinite() && G(trial).cwiseAbs().maxCoeff() <= rn) y = std::move(trial);
    }
  }
  return y;
}

} // namespace detail

template <Reaction R>
FieldState newton_solve(const R& model, double d, double tau, const Grid1D& grid,
                        const FieldState& guess, const NewtonOptions& opts = {}) {
  if (!(d > 0.0) || !(tau > 0.0)) throw DomainError("newton_solve: d and tau must be positive");
  if (!guess.finite()) throw DomainError("newton_solve: non-finite guess");
  const int m = guess.components();
  const detail::SteadySystem<R> sys{model, d, tau, grid, m};
  const Vector x = detail::damped_newton(
      detail::pack(guess), [&](const Vector& y) { return sys.residual(y); },
      [&](const Vector& y) { return sys.jacobian(y); }, opts, "newton_solve");
  FieldState s = detail::unpack(x, grid.size(), m);
  const double lo = s.min_entry();
  if (lo < -opts.negative_tolerance)
    throw NegativeSolutionError("newton_solve: converged state leaves the positive cone", lo);
  return s;
}

template <Reaction R>
double steady_residual(const R& model, double d, double tau, const Grid1D& grid,
                       const FieldState& s) {
  const detail::SteadySystem<R> sys{model, d, tau, grid, s.components()};
  return sys.residual(detail::pack(s)).cwiseAbs().maxCoeff();
}

// Sparse Jacobian of the steady operator in interleaved ordering.
template <Reaction R>
Eigen::SparseMatrix<double> steady_jacobian(const R& model, double d, double tau,
                                            const Grid1D& grid, const FieldState& s) {
  const detail::SteadySystem<R> sys{model, d, tau, grid, s.components()};
  return sys.jacobian(detail::pack(s));
}

// Solve W(d; x) = 0 together with u(center) = s for the unknowns (x, d).
// Used to seed branches and to pass folds.
struct AmplitudeSolution {
  FieldState state;
  double d = 0.0;
};

template <Reaction R>
AmplitudeSolution amplitude_solve(const R& model, double tau, const Grid1D& grid, double s,
                                  const FieldState& guess, double d_guess,
                                  const NewtonOptions& opts = {}) {
  const int m = guess.components();
  const int N = grid.size() * m;
  const int center = grid.center_index() * m;
  Vector y(N + 1);
  y.head(N) = detail::pack(guess);
  y[N] = d_guess;

  auto residual = [&](const Vector& z) {
    const double d = z[N];
    Vector r(N + 1);
    if (!(d > 0.0)) {
      r.setConstant(std::numeric_limits<double>::infinity());
      return r;
    }
    const detail::SteadySystem<R> sys{model, d, tau, grid, m};
    r.head(N) = sys.residual(z.head(N));
    r[N] = z[center] - s;
    return r;
  };
  auto jacobian = [&](const Vector& z) {
    const detail::SteadySystem<R> sys{model, z[N], tau, grid, m};
    std::vector<Eigen::Triplet<double>> t;
    sys.jacobian_triplets(z.head(N), t);
    const Vector dW = sys.laplace(z.head(N));
    for (int i = 0; i < N; ++i)
      if (dW[i] != 0.0) t.emplace_back(i, N, dW[i]);
    t.emplace_back(N, center, 1.0);
    Eigen::SparseMatrix<double> J(N + 1, N + 1);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  };
  const Vector z = detail::damped_newton(std::move(y), residual, jacobian, opts, "amplitude_solve");
  AmplitudeSolution out{detail::unpack(z.head(N), grid.size(), m), z[N]};
  const double lo = out.state.min_entry();
  if (lo < -opts.negative_tolerance)
    throw NegativeSolutionError("amplitude_solve: state leaves the positive cone", lo);
  return out;
}

struct Spectrum {
  double leading_eig = 0.0;      // largest real part
  double leading_eig_imag = 0.0; // imaginary part of that eigenvalue
  double min_sv = 0.0;
  // Stable iff every eigenvalue has real part below -threshold.
  bool stable(double threshold = 1e-8) const { return leading_eig < -threshold; }
};

// Eigenvalues and singular values of the dense steady Jacobian, which is also
// the linearisation of the time-dependent local system.
template <Reaction R>
Spectrum linearized_spectrum(const R& model, double d, double tau, const Grid1D& grid,
                             const FieldState& state) {
  const Eigen::MatrixXd J = Eigen::MatrixXd(steady_jacobian(model, d, tau, grid, state));
  Eigen::EigenSolver<Eigen::MatrixXd> es(J, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw IterationError("linearized_spectrum: eigensolver failed");
  Spectrum out;
  out.leading_eig = -std::numeric_limits<double>::infinity();
  // Ties in the real part (conjugate pairs) resolve to the non-negative
  // imaginary part so the result does not depend on solver ordering.
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto ev = es.eigenvalues()[i];
    if (ev.real() > out.leading_eig ||
        (ev.real() == out.leading_eig && ev.imag() > out.leading_eig_imag)) {
      out.leading_eig = ev.real();
      out.leading_eig_imag = ev.imag();
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
  out.min_sv = svd.singularValues().minCoeff();
  return out;
}

// ---------------------------------------------------------------------------
// Branch continuation.

struct BranchPoint {
  double d = 0.0;
  FieldState state;
  double amplitude = 0.0; // max u
  double leading_eig = std::numeric_limits<double>::quiet_NaN();
  double min_sv = std::numeric_limits<double>::quiet_NaN();
};

class FoldDetectedError : public Error {
public:
  FoldDetectedError(const std::string& what, std::vector<BranchPoint> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<BranchPoint>& partial() const noexcept { return partial_; }

private:
  std::vector<BranchPoint> partial_;
};

struct BranchOptions {
  double seed_fraction = 0.05; // seed amplitude as a fraction of the a priori u bound
  int seed_halvings = 6;
  int substep_halvings = 6;
  int max_amplitude_steps = 2000;
  bool spectrum = true;
  double positive_floor = -1e-10;
  NewtonOptions newton;
};

namespace detail {

inline bool acceptable_branch_state(const FieldState& s, double floor) {
  return s.finite() && s.min_entry() >= floor && s.u.maxCoeff() > 1e-12;
}

inline FieldState lerp(const FieldState& a, const FieldState& b, double t) {
  FieldState out{a.u + t * (b.u - a.u), a.v + t * (b.v - a.v), std::nullopt};
  if (a.w && b.w) out.w = *a.w + t * (*b.w - *a.w);
  return out;
}

} // namespace detail

template <Reaction R>
BranchPoint make_branch_point(const R& model, double tau, const Grid1D& grid, double d,
                              FieldState state, bool spectrum) {
  BranchPoint p;
  p.d = d;
  p.amplitude = state.u.maxCoeff();
  if (spectrum) {
    const Spectrum sp = linearized_spectrum(model, d, tau, grid, state);
    p.leading_eig = sp.leading_eig;
    p.min_sv = sp.min_sv;
  }
  p.state = std::move(state);
  return p;
}

// Positive branch emanating from (d*, 0). The seed is the local expansion
// s (1, M) phi1; amplitude stepping is used while the branch lies above
// d_start (subcritical case, around the fold), natural continuation in d
// with a secant predictor on the grid d_start -> d_end.
inline std::vector<BranchPoint> continue_branch(const ModelSpec& model, double tau,
                                                const Grid1D& grid, double d_start, double d_end,
                                                int n_steps, const BranchOptions& opts = {}) {
  const EigenPair eig = principal_eigenpair(grid);
  const BifSummary bs = bif_summary(model, tau, grid, eig);
  if (!(d_end > 0.0 && d_end < d_start && d_start < bs.d_star))
    throw DomainError("continue_branch: need 0 < d_end < d_start < d*");
  if (n_steps < 2) throw DomainError("continue_branch: need at least 2 steps");

  const double bound = bs.bounds ? bs.bounds->u_max : 1.0;
  const auto& nopt = opts.newton;
  auto solve_at = [&](double d, const FieldState& guess) -> std::optional<FieldState> {
    try {
      FieldState s = newton_solve(model, d, tau, grid, guess, nopt);
      if (detail::acceptable_branch_state(s, opts.positive_floor)) return s;
    } catch (const Error&) {
    }
    return std::nullopt;
  };
  auto amp_at = [&](double s, const FieldState& guess,
                    double d_guess) -> std::optional<AmplitudeSolution> {
    try {
      AmplitudeSolution a = amplitude_solve(model, tau, grid, s, guess, d_guess, nopt);
      if (detail::acceptable_branch_state(a.state, opts.positive_floor)) return a;
    } catch (const Error&) {
    }
    return std::nullopt;
  };

  // Seed.
  double s0 = opts.seed_fraction * bound;
  std::optional<AmplitudeSolution> seed;
  for (int tries = 0; tries <= opts.seed_halvings && !seed; ++tries, s0 *= 0.5) {
    const FieldState guess{s0 * eig.phi, s0 * bs.M * eig.phi, std::nullopt};
    seed = amp_at(s0, guess, bs.d_star + bs.d_prime0 * s0);
    if (seed) break;
  }
  if (!seed) throw NoConvergenceError("continue_branch: could not seed the branch near d*", 0.0);

  std::vector<BranchPoint> out;
  auto record = [&](double d, FieldState s) {
    out.push_back(make_branch_point(model, tau, grid, d, std::move(s), opts.spectrum));
  };

  // Amplitude stepping from (s_prev, prev) until the branch passes below
  // `target`. Returns the pair bracketing the crossing.
  const double ds_max = 0.05 * bound;
  auto march_amplitude = [&](double s_prev, AmplitudeSolution prev, double target,
                             bool keep) -> std::pair<AmplitudeSolution, AmplitudeSolution> {
    std::optional<std::pair<double, AmplitudeSolution>> older;
    double ds = std::min(s_prev, ds_max);
    for (int step = 0; step < opts.max_amplitude_steps; ++step) {
      const double s_new = s_prev + ds;
      FieldState guess;
      double d_guess;
      if (older) {
        const double t = ds / (s_prev - older->first);
        guess = detail::lerp(older->second.state, prev.state, 1.0 + t);
        d_guess = prev.d + t * (prev.d - older->second.d);
      } else {
        const double scale = s_new / s_prev;
        guess = FieldState{prev.state.u * scale, prev.state.v * scale, std::nullopt};
        d_guess = prev.d + bs.d_prime0 * ds;
      }
      auto next = amp_at(s_new, guess, d_guess);
      if (!next) {
        ds *= 0.5;
        if (ds < 1e-8 * bound)
          throw FoldDetectedError("continue_branch: amplitude stepping stalled", out);
        continue;
      }
      if (next->d <= target) return {prev, *next};
      if (keep) record(next->d, next->state);
      older = std::make_pair(s_prev, prev);
      s_prev = s_new;
      prev = *next;
      ds = std::min(ds * 1.5, ds_max);
    }
    throw FoldDetectedError("continue_branch: amplitude stepping did not reach target", out);
  };

  FieldState start_guess;
  if (seed->d >= d_start) {
    record(seed->d, seed->state);
    auto [above, below] = march_amplitude(s0, *seed, d_start, /*keep=*/true);
    const double t = (above.d - d_start) / (above.d - below.d);
    start_guess = detail::lerp(above.state, below.state, t);
  } else {
    const double scale = (bs.d_star - d_start) / (bs.d_star - seed->d);
    start_guess = FieldState{seed->state.u * scale, seed->state.v * scale, std::nullopt};
  }

  // Natural continuation.
  const double dd = (d_end - d_start) / (n_steps - 1);
  std::optional<std::pair<double, FieldState>> prev, prev2;
  auto first = solve_at(d_start, start_guess);
  if (!first) first = solve_at(d_start, seed->state);
  if (!first) throw FoldDetectedError("continue_branch: no positive solution at d_start", out);
  record(d_start, *first);
  prev = std::make_pair(d_start, *first);

  for (int k = 1; k < n_steps; ++k) {
    const double target = d_start + k * dd;
    double d_cur = prev->first;
    bool reached = false;
    for (int level = 0; level <= opts.substep_halvings && !reached; ++level) {
      const int pieces = 1 << level;
      const double h = (target - d_cur) / pieces;
      auto p1 = prev;
      auto p2 = prev2;
      bool ok = true;
      for (int j = 1; j <= pieces; ++j) {
        const double dj = d_cur + j * h;
        FieldState guess = p1->second;
        if (p2) guess = detail::lerp(p2->second, p1->second, 1.0 + (dj - p1->first) / (p1->first - p2->first));
        auto sol = solve_at(dj, guess);
        if (!sol && p2) sol = solve_at(dj, p1->second);
        if (!sol) {
          ok = false;
          break;
        }
        p2 = p1;
        p1 = std::make_pair(dj, std::move(*sol));
      }
      if (ok) {
        prev2 = p2;
        prev = p1;
        reached = true;
      }
    }
    if (!reached) {
      // Fold or loss of d-parameterisation: walk the amplitude until the
      // branch comes back below the target, then resume.
      const double s_prev = prev->second.u[grid.center_index()];
      AmplitudeSolution from{prev->second, prev->first};
      try {
        auto [above, below] = march_amplitude(s_prev, from, target, /*keep=*/false);
        const double t = (above.d - target) / (above.d - below.d);
        auto sol = solve_at(target, detail::lerp(above.state, below.state, t));
        if (!sol) throw FoldDetectedError("continue_branch: could not resume after fold", out);
        prev2.reset();
        prev = std::make_pair(target, std::move(*sol));
      } catch (const FoldDetectedError&) {
        throw FoldDetectedError("continue_branch: natural continuation failed near d = " +
                                    std::to_string(target),
                                out);
      }
    }
    record(prev->first, prev->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multi-start uniqueness probe.

enum class ProbeVerdict { unique, multiple, none };

inline const char* to_string(ProbeVerdict v) {
  switch (v) {
  case ProbeVerdict::unique: return "unique";
  case ProbeVerdict::multiple: return "multiple";
  case ProbeVerdict::none: return "none";
  }
  return "?";
}

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::none;
  std::vector<FieldState> distinct; // distinct positive solutions
  int converged_positive = 0;
  int converged_trivial = 0;
  int discarded = 0; // no convergence or left the positive cone
  bool structure_holds = false; // model carries a uniqueness hypothesis
};

struct ProbeOptions {
  std::uint64_t seed = 12345;
  double agreement_tol = 1e-6;
  double noise = 0.2;      // relative uniform perturbation
  double min_scale = 0.05; // start multiples of phi1, as fractions of the u bound
  double max_scale = 1.5;
  double trivial_tol = 1e-8;
  bool require_structure = false; // reject models without a uniqueness hypothesis
  NewtonOptions newton;
};

namespace detail {
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
} // namespace detail

// Random positive starting guesses, generated up front in a fixed order so
// the probe is reproducible regardless of scheduling.
inline std::vector<FieldState> probe_starts(const Grid1D& grid, const EigenPair& eig, double M,
                                            double bound, int n_starts, const ProbeOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<FieldState> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  for (int s = 0; s < n_starts; ++s) {
    const double scale =
        bound * (opts.min_scale + (opts.max_scale - opts.min_scale) * detail::uniform01(rng));
    FieldState f{Vector(grid.size()), Vector(grid.size()), std::nullopt};
    for (int i = 0; i < grid.size(); ++i) {
      const double nu = 1.0 + opts.noise * (2.0 * detail::uniform01(rng) - 1.0);
      const double nv = 1.0 + opts.noise * (2.0 * detail::uniform01(rng) - 1.0);
      f.u[i] = scale * eig.phi[i] * nu;
      f.v[i] = scale * M * eig.phi[i] * nv;
    }
    starts.push_back(std::move(f));
  }
  return starts;
}

inline ProbeResult uniqueness_probe(const ModelSpec& model, double d, double tau,
                                    const Grid1D& grid, int n_starts,
                                    const ProbeOptions& opts = {}) {
  const Assumptions as = model.assumptions();
  if (opts.require_structure && !as.A7 && !as.cooperative_sublinear)
    throw AssumptionError("uniqueness_probe: " + model.name() +
                          " has no uniqueness structure (consumer-resource or cooperative)");
  const EigenPair eig = principal_eigenpair(grid);
  const BifSummary bs = bif_summary(model, tau, grid, eig);
  const double bound = bs.bounds ? bs.bounds->u_max : 1.0;
  const auto starts = probe_starts(grid, eig, bs.M, bound, n_starts, opts);
  const bool structure = as.A7 || as.cooperative_sublinear;

  enum class Outcome { positive, trivial, discarded };
  struct Attempt {
    Outcome outcome = Outcome::discarded;
    FieldState state;
  };
  const auto attempts = parallel_map<Attempt>(starts.size(), [&](std::size_t i) {
    Attempt a;
    try {
      FieldState s = newton_solve(model, d, tau, grid, starts[i], opts.newton);
      if (s.max_abs() < opts.trivial_tol) {
        a.outcome = Outcome::trivial;
      } else if (s.min_entry() >= -1e-10) {
        a.outcome = Outcome::positive;
        a.state = std::move(s);
      }
    } catch (const Error&) {
    }
    return a;
  });

  ProbeResult out;
  out.structure_holds = structure;
  for (const auto& a : attempts) {
    switch (a.outcome) {
    case Outcome::trivial: ++out.converged_trivial; break;
    case Outcome::discarded: ++out.discarded; break;
    case Outcome::positive: {
      ++out.converged_positive;
      const bool seen = std::any_of(out.distinct.begin(), out.distinct.end(), [&](const FieldState& s) {
        return distance(s, a.state) < opts.agreement_tol;
      });
      if (!seen) out.distinct.push_back(a.state);
      break;
    }
    }
  }
  out.verdict = out.distinct.empty()        ? ProbeVerdict::none
                : out.distinct.size() == 1 ? ProbeVerdict::unique
                                            : ProbeVerdict::multiple;
  return out;
}

} // namespace rdelay

#endif
