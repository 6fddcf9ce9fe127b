#pragma once

#include <stdexcept>
#include <string>

namespace rwass {

/// Malformed or unreadable input (files, parameters out of range).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands that cannot be compared: dims, kind, stride or
/// preprocessing mismatch.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rwass
