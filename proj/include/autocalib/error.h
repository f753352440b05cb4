#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autocalib {

enum class ErrorCode {
  kInvalidArgument,
  kInsufficientData,
  kDegenerate,
  kScaleSign,
  kConditioning,
  kOrientation,
  kRange,
  kConsensus,
  kConvergence,
  kGeometry,
  kParse,
  kData,
  kIo,
  kConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception. The code lets
// callers (the pipeline in particular) decide whether a failure is local to
// one sensor or fatal for the whole run.
class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace autocalib
