#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genius {

enum class Errc {
  kMissingFile,
  kMalformedManifest,
  kNonMonotonicTimestamps,
  kRaggedColumns,
  kNonNumericCell,
  kMalformedCsv,
  kEmptyLog,
  kMalformedRules,
  kVisionServiceUnavailable,
  kVisionServiceMalformedReply,
  kCombinerServiceUnavailable,
  kEmptyDescription,
  kNoTokens,
  kEmbedderServiceUnavailable,
  kDimensionMismatch,
  kDuplicateId,
  kEmptyCollection,
  kIoFailure,
  kCorruptStore,
  kEmbedderMismatch,
  kEmptyProfile,
  kEmptyInput,
  kDegenerateProfile,
  kMissingLabels,
  kUnknownId,
  kInvalidArgument,
};

std::string_view errc_name(Errc code);

// All library failures are reported as genius::Error; code() identifies the
// failure kind, what() carries the location (file, line, index, query...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  // Message without the error-kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace genius
