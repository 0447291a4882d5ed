#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anchorloc {

enum class ErrorCode {
  kInvalidArgument,
  kZeroVector,
  kDegenerateSample,
  kCheiralityAmbiguous,
  kInsufficientMatches,
  kNoModelFound,
  kDegenerateRay,
  kDisconnectedQuery,
  kInsufficientInliers,
  kAllEdgesRejected,
  kDegenerateGeometry,
  kScaleUnobservable,
  kNoTracks,
  kInfeasibleSpec,
  kParseError,
  kMissingFile,
  kDanglingReference,
  kIoFailure,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kCheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kNoModelFound: return "NoModelFound";
    case ErrorCode::kDegenerateRay: return "DegenerateRay";
    case ErrorCode::kDisconnectedQuery: return "DisconnectedQuery";
    case ErrorCode::kInsufficientInliers: return "InsufficientInliers";
    case ErrorCode::kAllEdgesRejected: return "AllEdgesRejected";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kScaleUnobservable: return "ScaleUnobservable";
    case ErrorCode::kNoTracks: return "NoTracks";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace anchorloc
