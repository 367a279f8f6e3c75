#pragma once

#include <stdexcept>
#include <string>

namespace bc {

// Caller broke a documented precondition. CLI exit code 2.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Something that a theorem rules out happened. CLI exit code 3.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}
inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

}  // namespace bc
