#pragma once

#include <stdexcept>
#include <string>

namespace enertree {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (JSON/CSV) or a structural tree violation found
// while parsing.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but violates a domain precondition (bad ranges,
// missing ground truth, infeasible split, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A leaf node names a primitive that has no trained regressor.
class UnknownPrimitiveError : public ValidationError {
 public:
  explicit UnknownPrimitiveError(const std::string& primitive)
      : ValidationError("no regressor trained for primitive '" + primitive + "'"),
        primitive_(primitive) {}

  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

// Optimisation diverged or produced a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace enertree
