#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pseal {

/// Failure categories raised across the library. The CLI maps these onto its
/// exit-code taxonomy, so new entries must be placed in `exit_class()`.
enum class ErrorCode {
  // imaging / geometry
  kImageTooSmall,
  kThresholdOrder,
  kDimensionMismatch,
  kSchemaMismatch,
  kEmptyInput,
  kDegenerateTriangle,
  kBadImageFile,
  kBadLandmarkFile,
  // marks / matching / handgeom
  kEmptyPatch,
  kEmptySet,
  kEmptyGallery,
  kBinMismatch,
  kNotNormalized,
  kWeightSum,
  kInsufficientMarks,
  // crypto
  kBadPadding,
  kKeyTooLong,
  kIntegrityFailure,
  kShapeMismatch,
  kInvalidKeyImage,
  kBadContainer,
  // codec
  kUncorrectable,
  kPayloadTooLarge,
  kFormatInfoCorrupt,
  kPaletteAmbiguous,
  // payload
  kInvalidMrzCharacter,
  kBadMagic,
  kChecksumMismatch,
  kTruncatedInput,
  kInvalidField,
  // evalkit
  kZeroAreaBox,
  kEmptyScores,
  kDuplicateCandidate,
  kInsufficientData,
  // configuration / io
  kBadConfig,
  kIo,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace pseal
