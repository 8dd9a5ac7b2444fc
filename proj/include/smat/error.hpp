#pragma once

#include <stdexcept>
#include <string>

namespace smat {

// Base of every error raised by the library. The CLI maps subclasses to
// exit codes (see tools/smat.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IntegrationDiverged : public Error {
 public:
  using Error::Error;
};

class AlreadyAttached : public Error {
 public:
  using Error::Error;
};

class UpdateDiverged : public Error {
 public:
  using Error::Error;
};

class InvalidTransition : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

class EmptySegmentation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

inline void require_same_size(long a, long b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": size " + std::to_string(a) +
                            " != " + std::to_string(b));
  }
}

}  // namespace smat
