#pragma once

#include <stdexcept>
#include <string>

namespace nonvanish {

// Base class for all toolkit failures. Subclasses map onto CLI exit codes:
// configuration problems exit 2, numerical failures 3, I/O failures 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nonvanish
