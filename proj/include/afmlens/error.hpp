#pragma once

#include <stdexcept>
#include <string>

namespace afmlens {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An input value violates a documented invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Relative error against a zero-valued ground truth.
class DivisionByZeroError : public Error {
public:
  using Error::Error;
};

// Raised by file readers for stream-level problems (unreadable input,
// unknown columns). Row-level problems are collected, not thrown.
class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace afmlens
