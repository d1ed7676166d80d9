#pragma once

#include <stdexcept>
#include <string>

namespace monoattn {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes do not conform for an op. Message names the op and shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Unknown config key, unparseable value, malformed file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// All forward mass annihilated during renormalization. Only reachable when a
// window is disjoint from the reachable alignment support.
class DegenerateAttentionError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss encountered during training or checking.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace monoattn
