#pragma once

#include <stdexcept>
#include <string>

namespace pemlab {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit status 2 and everything else derived from Error to exit status 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside a family's admissible window, or an invalid family.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A point sits on (or within machine tolerance of) a branch point.
class BranchBoundaryError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// An operation was called on an object that is not in the required state
// (e.g. correlations before the invariant density was solved).
class StateError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// sigma_a(phi) vanishes: phi is (numerically) a co-boundary.
class DegenerateObservableError : public Error {
 public:
  using Error::Error;
};

// The point-of-interest map has zero derivative in the parameter.
class DegenerateSeedError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DepthCapError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pemlab
