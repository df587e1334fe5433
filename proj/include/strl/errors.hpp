#pragma once

#include <stdexcept>
#include <string>

namespace strl {

// Input document could not be parsed (bad syntax, wrong header, ...).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parsed fine but violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an out-of-contract argument.
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor operands with incompatible shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment configuration (unknown key, invalid value, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Routing plan inconsistent with the topology or OD set.
class RoutingError : public std::runtime_error {
 public:
  explicit RoutingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Environment could not reach a usable state (e.g. warm-up never covered a component).
class SetupError : public std::runtime_error {
 public:
  explicit SetupError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or a numerically ill-posed request.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint does not match the requested configuration.
class CompatibilityError : public std::runtime_error {
 public:
  explicit CompatibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace strl
