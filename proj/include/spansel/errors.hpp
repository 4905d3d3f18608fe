#pragma once

#include <stdexcept>
#include <string>

namespace spansel {

// Anchor or index outside the sentence it refers to.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A tree or span set that violates the grammar's structure.
class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The grammar has no parse for sentences shorter than two tokens.
class UnsupportedLength : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (corpus records, gold annotations).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace spansel
