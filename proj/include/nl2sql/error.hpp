#pragma once

#include <stdexcept>
#include <string>

namespace nl2sql {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Benchmark file could not be read or a record is malformed.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Invalid option values or unknown format tags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Database id has no file under the configured root.
class RegistryError : public Error {
 public:
  using Error::Error;
};

// Database file exists but cannot be opened or probed.
class OpenError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at offset " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace nl2sql
