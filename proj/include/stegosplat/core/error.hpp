#pragma once

#include <stdexcept>
#include <string>

namespace stegosplat {

/// Tensor or image dimensions disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or intermediate value became NaN/Inf, or a matrix was singular.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stegosplat
