#include "autocalib/error.h"

namespace autocalib {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kScaleSign: return "scale-sign";
    case ErrorCode::kConditioning: return "conditioning";
    case ErrorCode::kOrientation: return "orientation";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kConsensus: return "consensus";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kGeometry: return "geometry";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kData: return "data";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw CalibError(code, std::string(ErrorCodeName(code)) + ": " + message);
}

}  // namespace autocalib
