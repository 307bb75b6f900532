#pragma once

#include <stdexcept>
#include <string>

namespace wadapt {

enum class Errc {
  MissingFile,
  Io,
  UnknownColumn,
  MalformedTimestamp,
  MalformedValue,
  OutOfRange,
  EmptyFile,
  EmptyIntersection,
  InvalidArgument,
  DegenerateFeature,
  NoWindows,
  EmptySide,
  EmptyDataset,
  ShapeMismatch,
  NumericalDivergence,
  BadMagic,
  VersionMismatch,
  Truncated,
  DimensionMismatch,
  ArchMismatch,
};

const char* to_string(Errc code);

/// Library-wide exception. `code()` identifies the failure class; `what()`
/// carries a message naming the offending file, line, or feature.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace wadapt
