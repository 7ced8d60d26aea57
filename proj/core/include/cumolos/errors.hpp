#pragma once

#include <stdexcept>
#include <string>

namespace cumolos {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be read, written, or created.
struct IoError : Error {
  using Error::Error;
};

/// A requested variable is absent from an input file.
struct NamedVariableError : IoError {
  using IoError::IoError;
};

/// Array dimensions do not satisfy an operation's contract.
struct ShapeError : Error {
  using Error::Error;
};

/// A scalar argument is outside its admissible range.
struct ParameterError : Error {
  using Error::Error;
};

/// Required metadata (e.g. the sampling interval) is missing or invalid.
struct MetadataError : Error {
  using Error::Error;
};

/// Operation invoked on an object in the wrong state (untrained model,
/// mismatched checkpoint, ...).
struct StateError : Error {
  using Error::Error;
};

/// A computation produced non-finite values and was aborted.
struct NumericError : Error {
  using Error::Error;
};

/// Patch sets that must be in one-to-one correspondence are not.
struct AlignmentError : Error {
  using Error::Error;
};

/// Configuration file is malformed or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace cumolos
