#pragma once

#include <stdexcept>
#include <string>

namespace atcor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw input could not be read or failed validation as a whole.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Requested data span lies outside what was ingested.
class SpanError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint header does not match the expected model configuration.
class FingerprintError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace atcor
