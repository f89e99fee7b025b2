#pragma once

#include <stdexcept>
#include <string>

namespace psgdlab {

/// Bad input: wrong shape, violated precondition, malformed config value.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative routine failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psgdlab
