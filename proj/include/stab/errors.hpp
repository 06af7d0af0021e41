#pragma once

#include <stdexcept>
#include <string>

namespace stab {

enum class ErrorCode {
  NonConvergent,
  OutOfRange,
  EnvelopeFailure,
  DegenerateSamples,
  LevelFloorHit,
  StiffFlow,
  NotStarShaped,
  GammaPropertyViolated,
  BackwardBlowup,
  BlowupDetected,
  MissingSignal,
  UnknownName,
  ValidationError,
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  struct Verbatim {};  // message already carries the code name
  Error(ErrorCode code, const std::string& what, Verbatim)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace stab
