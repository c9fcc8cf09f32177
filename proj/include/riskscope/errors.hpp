// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riskscope {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct TooManyCells : Error {
  using Error::Error;
};

struct OutOfRegion : Error {
  using Error::Error;
};

/// Formula text could not be parsed; `position` is a byte offset into the input.
struct SyntaxError : Error {
  SyntaxError(const std::string& what, std::size_t pos)
      : Error(what + " (at position " + std::to_string(pos) + ")"), position(pos) {}
  std::size_t position;
};

struct UnboundCoordinate : Error {
  using Error::Error;
};

struct EmptyWindow : Error {
  using Error::Error;
};

struct InvalidState : Error {
  using Error::Error;
};

struct DegenerateTruth : Error {
  using Error::Error;
};

struct AllZero : Error {
  using Error::Error;
};

struct NonPositiveAlpha : Error {
  using Error::Error;
};

struct NonFinite : Error {
  using Error::Error;
};

struct SingularKernel : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace riskscope
