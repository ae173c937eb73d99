#include "sdmvs/error.h"

namespace sdmvs {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kInvalidCamera: return "InvalidCamera";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kDegenerateDistances: return "DegenerateDistances";
    case ErrorCode::kEmptyPatch: return "EmptyPatch";
    case ErrorCode::kInvalidFrame: return "InvalidFrame";
    case ErrorCode::kDegenerateDirection: return "DegenerateDirection";
    case ErrorCode::kDegenerateSums: return "DegenerateSums";
    case ErrorCode::kTooFewAnchors: return "TooFewAnchors";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kMagicMismatch: return "MagicMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUnknownPreset: return "UnknownPreset";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace sdmvs
