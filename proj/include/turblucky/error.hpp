#pragma once

#include <stdexcept>
#include <string>

namespace turblucky {

// Error categories map onto CLI exit codes: I/O 2, validation 3, numeric and state 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate numerics (zero variance, non-finite values).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong order, e.g. backward() without forward().
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace turblucky
