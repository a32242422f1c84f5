#pragma once

#include <stdexcept>
#include <string>

namespace ctxspot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input file exists but does not match its schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (missing file, unwritable directory, short read).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or activation.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace ctxspot
