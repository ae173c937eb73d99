#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdmvs {

enum class ErrorCode {
  kBehindCamera,
  kNonPositiveDepth,
  kOutOfBounds,
  kInvalidCamera,
  kTooSmall,
  kDegenerateDistances,
  kEmptyPatch,
  kInvalidFrame,
  kDegenerateDirection,
  kDegenerateSums,
  kTooFewAnchors,
  kParseError,
  kMissingFile,
  kDimensionMismatch,
  kDecodeError,
  kMagicMismatch,
  kTruncatedFile,
  kIoError,
  kUnknownPreset,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library. Hot paths use bool/optional
// returns instead and only the checked entry points throw.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdmvs
