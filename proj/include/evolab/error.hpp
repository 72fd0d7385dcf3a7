#pragma once

#include <stdexcept>
#include <string>

namespace evolab {

enum class ErrorCode {
  NonHermitian,
  NotPositiveDefinite,
  GammaOutOfRange,
  KindMismatch,
  DimensionMismatch,
  EmptyGrid,
  InsufficientGrid,
  LambdaInSector,
  SingularSystem,
  ContourTooShort,
  NotCoercive,
  SingularStep,
  DiniViolated,
  ShiftDivergence,
  NoCertifiedShift,
  GridTooCoarse,
  POutOfRange,
  MeshTooCoarse,
  ConfigError,
  MissingDependency,
  IoError,
};

const char* error_name(ErrorCode code);

/// Single exception type; the code says which contract broke.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace evolab
