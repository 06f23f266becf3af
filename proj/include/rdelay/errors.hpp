#ifndef RDELAY_ERRORS_HPP
#define RDELAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rdelay {

// Base of every error raised by the library. Callers that only care about
// "numerical failure" can catch this one.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (negative time,
// negative density, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// A structural hypothesis (e.g. a + b k > 0) does not hold for the model.
class AssumptionError : public Error {
public:
  using Error::Error;
};

// An eigen-iteration or dense eigensolver did not converge.
class IterationError : public Error {
public:
  using Error::Error;
};

class SingularOperatorError : public Error {
public:
  using Error::Error;
};

class QuadratureStepError : public Error {
public:
  using Error::Error;
};

class InsufficientHistoryError : public Error {
public:
  using Error::Error;
};

class MemoryBudgetError : public Error {
public:
  using Error::Error;
};

class BlowUpError : public Error {
public:
  using Error::Error;
};

// Newton iteration failed; carries the best residual seen.
class NoConvergenceError : public Error {
public:
  NoConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

// Newton converged, but to a state outside the positive cone.
class NegativeSolutionError : public Error {
public:
  NegativeSolutionError(const std::string& what, double min_entry)
      : Error(what), min_entry_(min_entry) {}
  double min_entry() const noexcept { return min_entry_; }

private:
  double min_entry_;
};

} // namespace rdelay

#endif
