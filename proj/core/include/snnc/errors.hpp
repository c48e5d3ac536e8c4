#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snnc {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/vector shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data; carries the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

// Invalid experiment configuration; message lists every problem found.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training aborted (e.g. divergence); carries the epoch it happened in.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& msg, std::size_t at_epoch)
      : Error(msg + " (epoch " + std::to_string(at_epoch) + ")"),
        epoch(at_epoch) {}
  std::size_t epoch;
};

inline void check_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace snnc
