#pragma once

#include <stdexcept>
#include <string>

namespace ntkc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bytes on disk do not follow the expected layout (magic, version, lengths).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (norms, ranges, shapes, symmetry).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine produced non-finite values or failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised by one pipeline stage and records the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ntkc
