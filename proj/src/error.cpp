#include "pseal/error.hpp"

namespace pseal {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kThresholdOrder: return "ThresholdOrder";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::kBadImageFile: return "BadImageFile";
    case ErrorCode::kBadLandmarkFile: return "BadLandmarkFile";
    case ErrorCode::kEmptyPatch: return "EmptyPatch";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kEmptyGallery: return "EmptyGallery";
    case ErrorCode::kBinMismatch: return "BinMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kWeightSum: return "WeightSum";
    case ErrorCode::kInsufficientMarks: return "InsufficientMarks";
    case ErrorCode::kBadPadding: return "BadPadding";
    case ErrorCode::kKeyTooLong: return "KeyTooLong";
    case ErrorCode::kIntegrityFailure: return "IntegrityFailure";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidKeyImage: return "InvalidKeyImage";
    case ErrorCode::kBadContainer: return "BadContainer";
    case ErrorCode::kUncorrectable: return "Uncorrectable";
    case ErrorCode::kPayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::kFormatInfoCorrupt: return "FormatInfoCorrupt";
    case ErrorCode::kPaletteAmbiguous: return "PaletteAmbiguous";
    case ErrorCode::kInvalidMrzCharacter: return "InvalidMrzCharacter";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kTruncatedInput: return "TruncatedInput";
    case ErrorCode::kInvalidField: return "InvalidField";
    case ErrorCode::kZeroAreaBox: return "ZeroAreaBox";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kDuplicateCandidate: return "DuplicateCandidate";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace pseal
