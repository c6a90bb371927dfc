#pragma once

#include <stdexcept>
#include <string>

namespace semloc {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Missing, unreadable or malformed data on disk. Maps to CLI exit code 3.
struct IoError : Error {
  using Error::Error;
};

/// Invalid configuration or spec field. Maps to CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Back-projection requested at a pixel with invalid (zero) depth.
struct NoDepthError : Error {
  using Error::Error;
};

/// Rigid alignment attempted on a rank-deficient point configuration.
struct DegenerateError : Error {
  using Error::Error;
};

/// Fewer matched query vertices than the minimal RANSAC sample needs.
struct InsufficientMatchesError : Error {
  using Error::Error;
};

/// Normal equations stay singular even after regularization.
struct UnderdeterminedError : Error {
  using Error::Error;
};

/// Descriptors with incompatible (n, m) shapes were compared.
struct ShapeMismatchError : Error {
  using Error::Error;
};

}  // namespace semloc
