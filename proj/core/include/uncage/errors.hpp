#pragma once

#include <stdexcept>
#include <string>

namespace uncage {

// Error taxonomy shared by the library and the CLI exit codes:
// std::invalid_argument -> 2, IoError -> 3, SchemaError -> 4, others -> 5.

/// File or stream level failure (missing file, short read, encode error).
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Structured input parsed but violates the expected schema.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// A metric was requested on inputs where it has no defined value
/// (e.g. mean keypoint error with zero visible keypoints).
class UndefinedMetricError : public std::invalid_argument {
public:
  explicit UndefinedMetricError(const std::string& what)
      : std::invalid_argument(what) {}
};

} // namespace uncage
