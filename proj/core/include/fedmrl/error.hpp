#pragma once

#include <stdexcept>
#include <string>

namespace fedmrl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf was produced or consumed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration, model spec or experiment file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable dataset / partition.
class DataError : public Error {
 public:
  using Error::Error;
};

/// File-system failure; message always carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked out of protocol order (stale cache, missing broadcast).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedmrl
