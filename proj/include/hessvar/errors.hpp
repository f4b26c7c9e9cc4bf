#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hessvar {

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix (or a node's Hessian) left the admissible set U.
class AdmissibilityError : public std::runtime_error {
 public:
  AdmissibilityError(const std::string& what, std::ptrdiff_t node = -1)
      : std::runtime_error(what), node_(node) {}
  /// Linear node index of the offending node, or -1 for a bare matrix.
  std::ptrdiff_t node() const { return node_; }

 private:
  std::ptrdiff_t node_;
};

/// An iterative method failed to make progress.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hessvar
