#include "wildloc/error.h"

#include <utility>

namespace wildloc {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kDecodeError: return "DecodeError";
    case ErrorKind::kFormatError: return "FormatError";
    case ErrorKind::kDegenerateRect: return "DegenerateRect";
    case ErrorKind::kInvalidGeoRect: return "InvalidGeoRect";
    case ErrorKind::kMissingImage: return "MissingImage";
    case ErrorKind::kInvalidTileSpec: return "InvalidTileSpec";
    case ErrorKind::kTooSmall: return "TooSmall";
    case ErrorKind::kOutOfBounds: return "OutOfBounds";
    case ErrorKind::kInsufficientPairs: return "InsufficientPairs";
    case ErrorKind::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::kNoModelFound: return "NoModelFound";
    case ErrorKind::kPointAtInfinity: return "PointAtInfinity";
    case ErrorKind::kExternalMatcherUnavailable: return "ExternalMatcherUnavailable";
    case ErrorKind::kExternalMatcherError: return "ExternalMatcherError";
    case ErrorKind::kWorldTooSmall: return "WorldTooSmall";
    case ErrorKind::kFootprintOutOfBounds: return "FootprintOutOfBounds";
    case ErrorKind::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, std::string detail)
    : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + detail),
      kind_(kind),
      detail_(std::move(detail)) {}

}  // namespace wildloc
