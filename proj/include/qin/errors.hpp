#pragma once

#include <stdexcept>
#include <string>

namespace qin {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

/// Invalid hyperparameters, run configuration or command-line usage.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Base for malformed on-disk content.
struct FormatError : Error {
  using Error::Error;
};

struct BadMagicError : FormatError {
  using FormatError::FormatError;
};

struct ShapeMismatchError : FormatError {
  using FormatError::FormatError;
};

struct TruncatedFileError : FormatError {
  using FormatError::FormatError;
};

/// Malformed dataset record; carries the 1-based line number.
struct ParseError : FormatError {
  ParseError(const std::string& what, std::size_t line_no)
      : FormatError(what), line(line_no) {}
  std::size_t line;
};

struct IdOutOfRangeError : Error {
  using Error::Error;
};

/// AUC is undefined when only one class is present.
struct SingleClassError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

}  // namespace qin
