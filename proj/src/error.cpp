#include "genius/error.hpp"

namespace genius {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kMalformedManifest: return "MalformedManifest";
    case Errc::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case Errc::kRaggedColumns: return "RaggedColumns";
    case Errc::kNonNumericCell: return "NonNumericCell";
    case Errc::kMalformedCsv: return "MalformedCsv";
    case Errc::kEmptyLog: return "EmptyLog";
    case Errc::kMalformedRules: return "MalformedRules";
    case Errc::kVisionServiceUnavailable: return "VisionServiceUnavailable";
    case Errc::kVisionServiceMalformedReply: return "VisionServiceMalformedReply";
    case Errc::kCombinerServiceUnavailable: return "CombinerServiceUnavailable";
    case Errc::kEmptyDescription: return "EmptyDescription";
    case Errc::kNoTokens: return "NoTokens";
    case Errc::kEmbedderServiceUnavailable: return "EmbedderServiceUnavailable";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kEmptyCollection: return "EmptyCollection";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kCorruptStore: return "CorruptStore";
    case Errc::kEmbedderMismatch: return "EmbedderMismatch";
    case Errc::kEmptyProfile: return "EmptyProfile";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kDegenerateProfile: return "DegenerateProfile";
    case Errc::kMissingLabels: return "MissingLabels";
    case Errc::kUnknownId: return "UnknownId";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace genius
