#pragma once

#include <stdexcept>
#include <string>

namespace tonemap {

// Shape or rank mismatch between operands.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an API precondition (e.g. backward on a non-scalar).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration value or unparsable config file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed file contents. Subclasses let callers tell failure classes apart.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedLayoutError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedDataError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Checkpoint specific failures.
class CheckpointError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class ShapeMismatchError : public CheckpointError {
 public:
  ShapeMismatchError(const std::string& param, const std::string& what)
      : CheckpointError(param + ": " + what), param_(param) {}
  const std::string& parameter() const { return param_; }

 private:
  std::string param_;
};

}  // namespace tonemap
