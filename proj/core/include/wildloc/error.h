#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wildloc {

// Every failure raised by the library carries one of these kinds. The CLI
// prints them verbatim as `error: <kind>: <detail>`.
enum class ErrorKind {
  kIoError,
  kDecodeError,
  kFormatError,
  kDegenerateRect,
  kInvalidGeoRect,
  kMissingImage,
  kInvalidTileSpec,
  kTooSmall,
  kOutOfBounds,
  kInsufficientPairs,
  kDegenerateConfiguration,
  kNoModelFound,
  kPointAtInfinity,
  kExternalMatcherUnavailable,
  kExternalMatcherError,
  kWorldTooSmall,
  kFootprintOutOfBounds,
  kMissingGroundTruth,
  kInvalidArgument,
  kConfigError,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace wildloc
