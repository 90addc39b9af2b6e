#pragma once

#include <stdexcept>
#include <string>

namespace treemark {

// Process exit codes shared by the CLI and its callers.
enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1,
  kExitInputError = 2,
  kExitNonConvergence = 3,
  kExitIncompatibleModel = 4,
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimacsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Clause wider than 3 literals; the converter handles 3CNF only.
struct WidthError : DimacsError {
  using DimacsError::DimacsError;
};

struct RefusedTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A queried model answered with the wrong output arity.
struct IncompatibleModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trigger behavior was not learnable within the retraining cap.
struct NonConvergenceError : std::runtime_error {
  NonConvergenceError(const std::string& what, int rounds_attempted)
      : std::runtime_error(what), rounds(rounds_attempted) {}
  int rounds;
};

}  // namespace treemark
