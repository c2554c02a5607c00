#pragma once

#include <stdexcept>
#include <string>

namespace echopose {

// Bad argument to an operation (non-finite params, out-of-range sizes, ...).
struct InvalidParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Well-formed call but the payload does not fit the contract
// (shape mismatch, length mismatch, ...).
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Not enough data to proceed (too few scans, empty subset, ...).
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal invariant was violated by a value that should have been
// normalized/produced by this library.
struct ContractViolationError : std::logic_error {
  using std::logic_error::logic_error;
};

// Training loss blew up; a checkpoint of the last state was written before
// aborting.
struct DivergenceError : std::runtime_error {
  std::string checkpoint_path;
  DivergenceError(const std::string& what, std::string path)
      : std::runtime_error(what), checkpoint_path(std::move(path)) {}
};

}  // namespace echopose
