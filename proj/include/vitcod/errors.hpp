#pragma once

#include <stdexcept>
#include <string>

namespace vitcod {

// Base of every error raised by the toolkit. The CLI maps the concrete
// subclasses onto its exit-code contract (argument 2, I/O 3, domain 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside the documented range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input violates a mathematical precondition (negative score, zero row, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tensor/matrix shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File or structure is syntactically malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed file that uses a feature outside the supported subset.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Payload shorter than its header claims.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Hardware configuration cannot host the requested schedule.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Gradient descent blew up.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vitcod
