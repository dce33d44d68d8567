#pragma once

#include <stdexcept>
#include <string>

namespace gks {

// Malformed input file (JSON syntax, schema, vector file lines).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input parses but violates a data invariant (dangling reference, duplicate key...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation called outside its precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training data cannot support the requested fit.
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gks
