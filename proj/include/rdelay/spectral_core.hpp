#ifndef RDELAY_SPECTRAL_CORE_HPP
#define RDELAY_SPECTRAL_CORE_HPP

// Discrete 1-D Dirichlet Laplacian on (0, L): grid, operator application,
// tridiagonal solves and the principal eigenpair.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "rdelay/errors.hpp"

namespace rdelay {

using Vector = Eigen::VectorXd;

// Uniform grid of the open interval (0, L). Boundary nodes x = 0 and x = L
// carry homogeneous Dirichlet data and are not stored.
class Grid1D {
public:
  Grid1D(double length, int n_interior)
      : length_(length), n_(n_interior), h_(length / (n_interior + 1)) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw DomainError("Grid1D: length must be positive and finite");
    if (n_interior < 3)
      throw DomainError("Grid1D: need at least 3 interior nodes, got " +
                        std::to_string(n_interior));
  }

  double length() const noexcept { return length_; }
  int size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double x(int i) const noexcept { return (i + 1) * h_; }

  Vector nodes() const {
    Vector xs(n_);
    for (int i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }

  template <class Fn> Vector sample(Fn&& f) const {
    Vector out(n_);
    for (int i = 0; i < n_; ++i) out[i] = f(x(i));
    return out;
  }

  // Index of the node nearest the midpoint L/2.
  int center_index() const noexcept { return (n_ - 1) / 2; }

private:
  double length_;
  int n_;
  double h_;
};

// Quadrature of a grid function over (0, L); the Dirichlet endpoints
// contribute zero so trapezoid and midpoint sums coincide.
inline double integrate(const Grid1D& grid, const Vector& f) {
  return grid.spacing() * f.sum();
}

inline double inner(const Grid1D& grid, const Vector& f, const Vector& g) {
  return grid.spacing() * f.dot(g);
}

// -d^2/dx^2 with Dirichlet rows eliminated: a symmetric tridiagonal Toeplitz
// matrix, units 1/length^2.
struct Laplacian {
  int n = 0;
  double diag = 0.0;
  double off = 0.0;

  Vector apply(const Vector& y) const {
    Vector out(n);
    for (int i = 0; i < n; ++i) {
      double acc = diag * y[i];
      if (i > 0) acc += off * y[i - 1];
      if (i + 1 < n) acc += off * y[i + 1];
      out[i] = acc;
    }
    return out;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = diag;
      if (i > 0) m(i, i - 1) = off;
      if (i + 1 < n) m(i, i + 1) = off;
    }
    return m;
  }
};

inline Laplacian build_laplacian(const Grid1D& grid) {
  const double h2 = grid.spacing() * grid.spacing();
  return Laplacian{grid.size(), 2.0 / h2, -1.0 / h2};
}

// LU factorisation of  d * (-Delta_h) + sigma * I  (Thomas algorithm).
// Factor once, solve many times; time stepping reuses one instance per step
// size.
class ShiftedSolver {
public:
  static constexpr double kPivotFloor = 1e-14;

  ShiftedSolver(const Grid1D& grid, double d, double sigma)
      : n_(grid.size()), lower_(n_), pivot_(n_) {
    const Laplacian lap = build_laplacian(grid);
    const double diag = d * lap.diag + sigma;
    off_ = d * lap.off;
    // Pivots are checked relative to the operator scale.
    const double scale = std::abs(diag) + 2.0 * std::abs(off_);
    pivot_[0] = diag;
    check_pivot(0, scale);
    for (int i = 1; i < n_; ++i) {
      lower_[i] = off_ / pivot_[i - 1];
      pivot_[i] = diag - lower_[i] * off_;
      check_pivot(i, scale);
    }
  }

  Vector solve(const Vector& rhs) const {
    Vector x(n_);
    solve_into(rhs, x);
    return x;
  }

  void solve_into(const Vector& rhs, Vector& x) const {
    x.resize(n_);
    x[0] = rhs[0];
    for (int i = 1; i < n_; ++i) x[i] = rhs[i] - lower_[i] * x[i - 1];
    x[n_ - 1] /= pivot_[n_ - 1];
    for (int i = n_ - 2; i >= 0; --i) x[i] = (x[i] - off_ * x[i + 1]) / pivot_[i];
  }

  int size() const noexcept { return n_; }

private:
  void check_pivot(int i, double scale) const {
    if (!(std::abs(pivot_[i]) > kPivotFloor * (scale > 0 ? scale : 1.0)))
      throw SingularOperatorError("shifted Laplacian solve: pivot " +
                                  std::to_string(i) + " is numerically zero");
  }

  int n_;
  double off_ = 0.0;
  Vector lower_;
  Vector pivot_;
};

// Solves (-d Delta_h + sigma) x = rhs.
inline Vector solve_shifted(const Grid1D& grid, double d, double sigma, const Vector& rhs) {
  if (rhs.size() != grid.size())
    throw DomainError("solve_shifted: rhs size does not match grid");
  return ShiftedSolver(grid, d, sigma).solve(rhs);
}

struct EigenPair {
  double lambda = 0.0;
  Vector phi;
};

struct EigenIterationOptions {
  int max_iterations = 10000;
  double rayleigh_tol = 1e-12; // relative change of successive Rayleigh quotients
  double vector_tol = 1e-13;   // max-norm change of the normalised iterate
};

// Principal Dirichlet eigenpair by inverse power iteration. phi is scaled to
// max-norm 1 and strictly positive.
inline EigenPair principal_eigenpair(const Grid1D& grid, const EigenIterationOptions& opts = {}) {
  const Laplacian lap = build_laplacian(grid);
  const ShiftedSolver solver(grid, 1.0, 0.0);

  Vector x = Vector::Ones(grid.size());
  double rq_prev = x.dot(lap.apply(x)) / x.squaredNorm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector y = solver.solve(x);
    y /= y.cwiseAbs().maxCoeff();
    if (y.sum() < 0) y = -y;
    const double rq = y.dot(lap.apply(y)) / y.squaredNorm();
    const double dx = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    if (std::abs(rq - rq_prev) < opts.rayleigh_tol * std::abs(rq) && dx < opts.vector_tol)
      return EigenPair{rq, x};
    rq_prev = rq;
  }
  throw IterationError("principal_eigenpair: inverse iteration did not converge within " +
                       std::to_string(opts.max_iterations) + " iterations");
}

} // namespace rdelay

#endif
