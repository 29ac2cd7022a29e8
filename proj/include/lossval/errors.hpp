#pragma once

#include <stdexcept>
#include <string>

namespace lossval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered or produced.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid option, preset or suite description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed external input (CSV, config, report files).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace lossval
