#pragma once

#include <stdexcept>
#include <string>

namespace lvr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector extents that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: unreadable files, missing labels, empty corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or diverged training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary files (weights, index).
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_version, truncated, malformed };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace lvr
