#pragma once

#include <stdexcept>
#include <string>

namespace uavsched {

// Invalid argument values (non-positive sizes, bad modes, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A task or vehicle index outside its valid range.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Incompatible tensor shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (wrong state, foreign task, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// NaN/Inf where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files: instances, solutions, configs, checkpoints.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uavsched
