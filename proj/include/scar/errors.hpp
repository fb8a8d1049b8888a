#pragma once

#include <stdexcept>
#include <string>

namespace scar {

// Base for everything this library throws on its own behalf.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible or malformed array/tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range labels, non-finite values, invalid hyperparameters.
class ValueError : public Error {
 public:
  using Error::Error;
};

// CSV / text input that cannot be parsed; message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Bad magic, truncation, or layer mismatch in a checkpoint file.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Invalid or unknown experiment configuration keys/values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace scar
