#include "wadapt/error.hpp"

namespace wadapt {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::Io: return "Io";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::MalformedTimestamp: return "MalformedTimestamp";
    case Errc::MalformedValue: return "MalformedValue";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::EmptyIntersection: return "EmptyIntersection";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateFeature: return "DegenerateFeature";
    case Errc::NoWindows: return "NoWindows";
    case Errc::EmptySide: return "EmptySide";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NumericalDivergence: return "NumericalDivergence";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::Truncated: return "Truncated";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ArchMismatch: return "ArchMismatch";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace wadapt
