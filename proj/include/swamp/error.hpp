#pragma once

#include <stdexcept>
#include <string>

namespace swamp {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatches and violated call contracts (non-scalar loss, empty set, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values: tau <= 0, unknown enum string, unknown JSON key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numeric degeneracies: dead embeddings, non-finite losses or costs,
// zero-mass assignment targets.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failures (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. Subclasses distinguish the documented failure modes.
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

class MagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

class VersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncationError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace swamp
