#pragma once

#include <stdexcept>
#include <string>

namespace sphereflow {

enum class ErrorCode {
  InvalidInput = 1,
  Domain,
  DegenerateMesh,
  GaugeLoss,
  BlowUp,
  SolverFailure,
  Config,
  Io,
};

const char* to_string(ErrorCode code);

/// Single exception type thrown by the library. The code is what the C API
/// returns across the shared-library boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sphereflow
