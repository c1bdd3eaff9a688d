#pragma once

#include <stdexcept>
#include <string>

namespace softbubble {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad dimensions, out-of-range parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace softbubble
