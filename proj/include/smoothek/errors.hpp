#pragma once

#include <stdexcept>
#include <string>

namespace smoothek {

// Range or table exceeds the configured memory/sieving budget. Maps to exit code 3.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Root bracket without a sign change; carries the endpoint values in the message.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computed quantity violated an internal invariant (e.g. a probability outside [0,1]).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Exact convolution requested above its O(m^2) budget; the caller should sample instead.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smoothek
