#ifndef RDELAY_TIME_INTEGRATION_HPP
#define RDELAY_TIME_INTEGRATION_HPP

// Method-of-lines time stepping. The local system (u, v[, w]) uses a first
// order IMEX split: diffusion and linear relaxation implicit, reactions
// explicit. The nonlocal simulator integrates the delayed equation directly
// from a stored modal history and serves as the equivalence oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rdelay/errors.hpp"
#include "rdelay/kernel_equivalence.hpp"
#include "rdelay/model_catalog.hpp"
#include "rdelay/spectral_core.hpp"
#include "rdelay/steady_state.hpp"

namespace rdelay {

inline constexpr double kBlowUpThreshold = 1e6;

enum class Verdict { converged_to_zero, converged_to_positive, not_converged };

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::converged_to_zero: return "converged-to-zero";
  case Verdict::converged_to_positive: return "converged-to-positive";
  case Verdict::not_converged: return "not-converged";
  }
  return "?";
}

struct SimConfig {
  double dt = 1e-3;
  double t_end = 200.0;
  int output_stride = 1000;        // steps between stored snapshots
  double convergence_tol = 1e-7;   // max-norm change per unit time
  double attractor_tol = 1e-4;     // distance to the Newton steady state
  double zero_tol = 1e-3;          // max norm below which the state counts as zero
  bool stop_on_convergence = true;
  int convergence_window = 10;     // in output strides
  std::size_t history_cap = 2'000'000; // scalar entries kept by the nonlocal simulator

  void validate(double tau) const {
    if (!(dt > 0.0)) throw DomainError("SimConfig: dt must be positive");
    if (dt > tau / 4.0) throw DomainError("SimConfig: dt must not exceed tau/4");
    if (!(t_end > 0.0)) throw DomainError("SimConfig: t_end must be positive");
    if (output_stride < 1) throw DomainError("SimConfig: output_stride must be >= 1");
    if (convergence_window < 1) throw DomainError("SimConfig: convergence_window must be >= 1");
  }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<FieldState> snapshots;
  Verdict verdict = Verdict::not_converged;
  FieldState final_state;
  double final_time = 0.0;
  bool stopped_early = false;
  std::optional<FieldState> attractor;    // Newton steady state matched, if any
  double attractor_distance = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {
inline void check_blow_up(const Vector& x, const char* field, double t) {
  const double m = x.cwiseAbs().maxCoeff();
  if (!std::isfinite(m) || m > kBlowUpThreshold)
    throw BlowUpError(std::string("blow-up in ") + field + " at t = " + std::to_string(t));
}
} // namespace detail

// One first-order IMEX step of the local system, reusing factorised
// operators across steps.
template <Reaction R> class ImexStepper {
public:
  ImexStepper(const R& model, double d, double tau, const Grid1D& grid, double dt)
      : model_(model), tau_(tau), dt_(dt), u_solver_(grid, d, 1.0 / dt),
        aux_solver_(grid, d, 1.0 / dt + 1.0 / tau), n_(grid.size()) {
    if (!(dt > 0.0)) throw DomainError("ImexStepper: dt must be positive");
  }

  void step(FieldState& s, double t_new = 0.0) const {
    Vector ru(n_), rv(n_);
    for (int i = 0; i < n_; ++i) {
      const double u = s.u[i], v = s.v[i];
      ru[i] = u / dt_ + model_.F(u, v);
      rv[i] = v / dt_ + (s.w ? (*s.w)[i] : model_.H(u)) / tau_;
    }
    if (s.w) {
      Vector rw(n_);
      for (int i = 0; i < n_; ++i) rw[i] = (*s.w)[i] / dt_ + model_.H(s.u[i]) / tau_;
      aux_solver_.solve_into(rw, *s.w);
      detail::check_blow_up(*s.w, "w", t_new);
    }
    u_solver_.solve_into(ru, s.u);
    aux_solver_.solve_into(rv, s.v);
    detail::check_blow_up(s.u, "u", t_new);
    detail::check_blow_up(s.v, "v", t_new);
  }

private:
  R model_;
  double tau_;
  double dt_;
  ShiftedSolver u_solver_;
  ShiftedSolver aux_solver_;
  int n_;
};

template <Reaction R>
FieldState step_imex(const R& model, double d, double tau, const Grid1D& grid,
                     const FieldState& state, double dt) {
  if (dt > tau / 4.0) throw DomainError("step_imex: dt must not exceed tau/4");
  FieldState s = state;
  ImexStepper<R>(model, d, tau, grid, dt).step(s, dt);
  return s;
}

// Direct integration of u_t = d u_xx + F(u, (g ** H(u))). The delayed term is
// kept per Dirichlet mode: c_n(t) = <phi_n, H(u(., t))>_h is stored over a lag
// window and the convolution is a trapezoid sum against
//   g(r) exp(-d lambda_n r).
// Each mode's window is cut where (d lambda_n + 1/tau) r >= 45, beyond which
// the weight is below e^-45 relative to its peak.
template <Reaction R> class NonlocalStepper {
public:
  static constexpr double kModeCutoff = 45.0;

  NonlocalStepper(const R& model, const KernelSpec& kernel, double d, const Grid1D& grid,
                  const HistoryFn& eta, double dt, std::size_t cap)
      : model_(model), green_(grid), dt_(dt), u_solver_(grid, d, 1.0 / dt),
        n_(grid.size()) {
    if (!(dt > 0.0)) throw DomainError("NonlocalStepper: dt must be positive");
    const double T = history_horizon(kernel, eta.horizon);
    const int modes = green_.modes();
    lags_.resize(modes);
    weights_.resize(modes);
    ring_.resize(modes);
    head_.assign(modes, 0);
    std::size_t stored = 0;
    int max_lag = 0;
    for (int k = 0; k < modes; ++k) {
      const double lam = green_.eigenvalues()[k];
      const double alpha = d * lam + 1.0 / kernel.tau;
      const double r = std::min(T, kModeCutoff / alpha);
      const int L = std::max(1, static_cast<int>(std::ceil(r / dt - 1e-9)));
      lags_[k] = L;
      max_lag = std::max(max_lag, L);
      stored += static_cast<std::size_t>(L + 1);
      weights_[k].resize(L + 1);
      for (int m = 0; m <= L; ++m) {
        const double s = m * dt;
        weights_[k][m] = (m == 0 || m == L ? 0.5 : 1.0) * dt * kernel_value(kernel, s) *
                         std::exp(-d * lam * s);
      }
    }
    if (stored > cap)
      throw MemoryBudgetError("NonlocalStepper: history needs " + std::to_string(stored) +
                              " entries, cap is " + std::to_string(cap));
    // Ring slot m holds c(t - m dt) relative to head; prefill from eta.
    for (int k = 0; k < modes; ++k) ring_[k].assign(lags_[k] + 1, 0.0);
    for (int m = 0; m <= max_lag; ++m) {
      const Vector c = green_.project(H_of(eta.on_grid(grid, -m * dt)));
      for (int k = 0; k < modes; ++k)
        if (m <= lags_[k]) ring_[k][m] = c[k];
    }
    u_ = eta.on_grid(grid, 0.0);
    stored_entries_ = stored;
  }

  const Vector& u() const noexcept { return u_; }
  std::size_t stored_entries() const noexcept { return stored_entries_; }

  // (g ** H(u))(., t) at the current time.
  const Vector& delayed_term() const {
    if (!cached_) cached_ = compute_delayed_term();
    return *cached_;
  }

  // Advances u by one step; returns the delayed term used for it.
  Vector step(double t_new) {
    Vector V = delayed_term();
    Vector rhs(n_);
    for (int i = 0; i < n_; ++i) rhs[i] = u_[i] / dt_ + model_.F(u_[i], V[i]);
    u_solver_.solve_into(rhs, u_);
    detail::check_blow_up(u_, "u", t_new);
    const Vector c = green_.project(H_of(u_));
    for (int k = 0; k < green_.modes(); ++k) {
      const int size = lags_[k] + 1;
      head_[k] = head_[k] == 0 ? size - 1 : head_[k] - 1;
      ring_[k][head_[k]] = c[k];
    }
    cached_.reset();
    return V;
  }

private:
  Vector compute_delayed_term() const {
    const int modes = green_.modes();
    Vector acc(modes);
    for (int k = 0; k < modes; ++k) {
      const auto& w = weights_[k];
      const auto& buf = ring_[k];
      const int size = lags_[k] + 1;
      double sum = 0.0;
      for (int m = 0; m < size; ++m) {
        int slot = head_[k] + m;
        if (slot >= size) slot -= size;
        sum += w[m] * buf[slot];
      }
      acc[k] = sum;
    }
    return green_.synthesize(acc);
  }

  Vector H_of(const Vector& u) const {
    Vector out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = model_.H(u[i]);
    return out;
  }

  R model_;
  GreenExpansion green_;
  double dt_;
  ShiftedSolver u_solver_;
  int n_;
  std::vector<int> lags_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> ring_;
  std::vector<int> head_;
  Vector u_;
  std::size_t stored_entries_ = 0;
  mutable std::optional<Vector> cached_;
};

// Initial local-system state from a history: u(0) = eta(0), auxiliary
// fields from the history-to-initial-data maps (quadrature step dt).
template <Reaction R>
FieldState initial_state(const R& model, const KernelSpec& kernel, double d, const Grid1D& grid,
                         const HistoryFn& eta, double step) {
  const GreenExpansion g(grid);
  const ScalarMap H = [&](double u) { return model.H(u); };
  FieldState s{eta.on_grid(grid, 0.0), Vector(), std::nullopt};
  if (kernel.order == KernelOrder::weak) {
    s.v = history_to_initial_weak(g, d, kernel, H, eta, step);
  } else {
    auto vw = history_to_initial_strong(g, d, kernel, H, eta, step);
    s.v = std::move(vw.v0);
    s.w = std::move(vw.w0);
  }
  return s;
}

// Verdict by final max norm, else by distance to the Newton steady state
// seeded from the final state.
template <Reaction R>
void classify(const R& model, double d, double tau, const Grid1D& grid, const SimConfig& cfg,
              Trajectory& traj) {
  const FieldState& fs = traj.final_state;
  if (fs.max_abs() < cfg.zero_tol) {
    traj.verdict = Verdict::converged_to_zero;
    return;
  }
  traj.verdict = Verdict::not_converged;
  try {
    FieldState steady = newton_solve(model, d, tau, grid, fs);
    if (steady.max_abs() < cfg.zero_tol) return;
    traj.attractor_distance = distance(steady, fs);
    if (traj.attractor_distance < cfg.attractor_tol) traj.verdict = Verdict::converged_to_positive;
    traj.attractor = std::move(steady);
  } catch (const Error&) {
  }
}

namespace detail {

// Shared driver: `advance(state, j)` moves state from step j-1 to j.
template <class Advance>
void run_steps(const SimConfig& cfg, FieldState state, Advance&& advance, Trajectory& traj) {
  const long steps = std::max(1L, std::lround(cfg.t_end / cfg.dt));
  std::deque<std::pair<double, FieldState>> window;
  auto snapshot = [&](double t, const FieldState& s) {
    traj.t.push_back(t);
    traj.snapshots.push_back(s);
    window.emplace_back(t, s);
    if (static_cast<int>(window.size()) > cfg.convergence_window + 1) window.pop_front();
  };
  snapshot(0.0, state);
  long j = 1;
  for (; j <= steps; ++j) {
    advance(state, j);
    if (j % cfg.output_stride == 0 || j == steps) {
      snapshot(j * cfg.dt, state);
      if (cfg.stop_on_convergence && static_cast<int>(window.size()) == cfg.convergence_window + 1) {
        const auto& [t0, s0] = window.front();
        const auto& [t1, s1] = window.back();
        if (distance(s0, s1) / (t1 - t0) < cfg.convergence_tol) {
          traj.stopped_early = j < steps;
          break;
        }
      }
    }
  }
  traj.final_time = std::min(j, steps) * cfg.dt;
  traj.final_state = std::move(state);
}

} // namespace detail

template <Reaction R>
Trajectory simulate(const R& model, const KernelSpec& kernel, double d, const Grid1D& grid,
                    const HistoryFn& eta, const SimConfig& cfg) {
  cfg.validate(kernel.tau);
  if (!(d > 0.0)) throw DomainError("simulate: d must be positive");
  const FieldState init = initial_state(model, kernel, d, grid, eta, cfg.dt);
  const ImexStepper<R> stepper(model, d, kernel.tau, grid, cfg.dt);
  Trajectory traj;
  detail::run_steps(cfg, init, [&](FieldState& s, long j) { stepper.step(s, j * cfg.dt); }, traj);
  classify(model, d, kernel.tau, grid, cfg, traj);
  return traj;
}

// Snapshots carry (u, V) with V the delayed term at the snapshot time; for
// the strong kernel w is set to V as well (they coincide at equilibrium).
template <Reaction R>
Trajectory simulate_nonlocal(const R& model, const KernelSpec& kernel, double d,
                             const Grid1D& grid, const HistoryFn& eta, const SimConfig& cfg) {
  cfg.validate(kernel.tau);
  if (!(d > 0.0)) throw DomainError("simulate_nonlocal: d must be positive");
  NonlocalStepper<R> stepper(model, kernel, d, grid, eta, cfg.dt, cfg.history_cap);
  auto pack = [&](const Vector& u, const Vector& V) {
    FieldState s{u, V, std::nullopt};
    if (kernel.order == KernelOrder::strong) s.w = V;
    return s;
  };
  Trajectory traj;
  detail::run_steps(cfg, pack(stepper.u(), stepper.delayed_term()),
                    [&](FieldState& s, long j) {
                      stepper.step(j * cfg.dt);
                      s = pack(stepper.u(), stepper.delayed_term());
                    },
                    traj);
  classify(model, d, kernel.tau, grid, cfg, traj);
  return traj;
}

struct EquivalenceGap {
  double max_gap = 0.0; // max over steps of max-norm u difference
  double t_at_max = 0.0;
  long steps = 0;
};

// Runs the local system and the direct nonlocal equation in lockstep from
// the same history and tracks the u-field gap at every step.
template <Reaction R>
EquivalenceGap equivalence_gap(const R& model, const KernelSpec& kernel, double d,
                               const Grid1D& grid, const HistoryFn& eta, const SimConfig& cfg) {
  cfg.validate(kernel.tau);
  FieldState local = initial_state(model, kernel, d, grid, eta, cfg.dt);
  const ImexStepper<R> imex(model, d, kernel.tau, grid, cfg.dt);
  NonlocalStepper<R> direct(model, kernel, d, grid, eta, cfg.dt, cfg.history_cap);
  EquivalenceGap out;
  out.steps = std::max(1L, std::lround(cfg.t_end / cfg.dt));
  out.max_gap = (local.u - direct.u()).cwiseAbs().maxCoeff();
  for (long j = 1; j <= out.steps; ++j) {
    const double t = j * cfg.dt;
    imex.step(local, t);
    direct.step(t);
    const double gap = (local.u - direct.u()).cwiseAbs().maxCoeff();
    if (gap > out.max_gap) {
      out.max_gap = gap;
      out.t_at_max = t;
    }
  }
  return out;
}

// ModelSpec entry points dispatch once to the concrete reaction type.
inline FieldState step_imex(const ModelSpec& model, double d, double tau, const Grid1D& grid,
                            const FieldState& state, double dt) {
  return model.visit([&](const auto& m) { return step_imex(m, d, tau, grid, state, dt); });
}

inline Trajectory simulate(const ModelSpec& model, const KernelSpec& kernel, double d,
                           const Grid1D& grid, const HistoryFn& eta, const SimConfig& cfg) {
  return model.visit([&](const auto& m) { return simulate(m, kernel, d, grid, eta, cfg); });
}

inline Trajectory simulate_nonlocal(const ModelSpec& model, const KernelSpec& kernel, double d,
                                    const Grid1D& grid, const HistoryFn& eta,
                                    const SimConfig& cfg) {
  return model.visit(
      [&](const auto& m) { return simulate_nonlocal(m, kernel, d, grid, eta, cfg); });
}

inline EquivalenceGap equivalence_gap(const ModelSpec& model, const KernelSpec& kernel, double d,
                                      const Grid1D& grid, const HistoryFn& eta,
                                      const SimConfig& cfg) {
  return model.visit(
      [&](const auto& m) { return equivalence_gap(m, kernel, d, grid, eta, cfg); });
}

} // namespace rdelay

#endif
