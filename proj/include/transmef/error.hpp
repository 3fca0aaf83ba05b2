#pragma once

#include <stdexcept>
#include <string>

namespace transmef {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents or channel counts that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced in a forward pass, a loss, or a gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data (images, corpora, config values).
class DataError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace transmef
