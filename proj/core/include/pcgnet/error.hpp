#pragma once

#include <stdexcept>
#include <string>

namespace pcgnet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable files, unsupported formats, bad directory layouts.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are readable but violate a documented constraint
/// (shape mismatches, out-of-range parameters, degenerate datasets).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced by a forward or backward computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcgnet
