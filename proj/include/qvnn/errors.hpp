#pragma once

#include <stdexcept>
#include <string>

namespace qvnn {

// Incompatible matrix dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-contract user input (configs, fixtures, arguments).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A simulated state became non-finite. `time()` is the first bad sample time.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NoEquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qvnn
