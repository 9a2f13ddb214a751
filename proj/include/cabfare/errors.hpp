#pragma once

#include <stdexcept>
#include <string>

namespace cabfare {

// Base of every error the library raises. The CLI maps the two families
// below onto its exit codes (data error = 2, IO error = 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public DataError {
 public:
  using DataError::DataError;
};

class NoTripsFound : public DataError {
 public:
  NoTripsFound() : DataError("no historical trips near origin") {}
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class InvalidRange : public DataError {
 public:
  using DataError::DataError;
};

class ProviderUnavailable : public IoError {
 public:
  using IoError::IoError;
};

class MalformedResponse : public IoError {
 public:
  using IoError::IoError;
};

class GeocoderUnavailable : public IoError {
 public:
  using IoError::IoError;
};

// Binary file problems: version mismatch and corrupt file (bad magic,
// truncation, checksum).
class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class CorruptFile : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cabfare
