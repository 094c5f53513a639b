#pragma once

#include <stdexcept>
#include <string>

namespace plmi {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration or exact-integer limit would be exceeded.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// A generator was called on a spec with an unsupported fold count.
class WrongFold : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operands were built over different variable registries.
class RegistryError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace plmi
