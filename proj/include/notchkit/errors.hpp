#pragma once

#include <stdexcept>

namespace notchkit {

// Error taxonomy mirrors the CLI exit codes: usage 1, data 2, numeric 3.

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent inputs: manifests, records, infeasible requests.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: singular systems, diverging training, non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace notchkit
