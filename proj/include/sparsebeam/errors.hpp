#pragma once

#include <stdexcept>
#include <string>

namespace sparsebeam {

// Bad inputs: shapes, ranges, unparsable files. CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown at runtime. CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A matrix that must be (numerically) positive definite is not.
class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sparsebeam
