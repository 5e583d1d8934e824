#pragma once

#include <stdexcept>
#include <string>

namespace cyrisk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied specification or broken graph invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Malformed input document; the message carries the path to the offending
// element (e.g. "nodes[3]: ...").
struct ParseError : Error {
  using Error::Error;
};

// Unknown node id, solver name, or similar.
struct LookupError : Error {
  using Error::Error;
};

// Instance exceeds a solver's hard cap.
struct CapacityError : Error {
  using Error::Error;
};

// Remote sampler failures; the hybrid solver catches these and falls back
// to the local exact subproblem solve.
struct RemoteError : Error {
  enum class Kind { network, malformed, energy_mismatch };

  RemoteError(Kind k, const std::string& msg) : Error(msg), kind(k) {}

  Kind kind;
};

}  // namespace cyrisk
