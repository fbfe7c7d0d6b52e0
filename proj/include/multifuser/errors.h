#pragma once

#include <stdexcept>
#include <string>

namespace multifuser {

// Shape or extent disagreement between operands.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Invalid hyperparameters or inputs that do not match a configuration.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed or incompatible files on disk.
class LoadError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace multifuser
