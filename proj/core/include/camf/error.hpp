#pragma once

#include <stdexcept>
#include <string>

namespace camf {

// Error families map one-to-one onto CLI exit codes (see tools/commands.hpp).

/// Invalid configuration: bad option values, missing keys, inconsistent inputs.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File-system failure or malformed file content.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numeric-domain failure: parameter preconditions, cyclic flow graphs.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace camf
