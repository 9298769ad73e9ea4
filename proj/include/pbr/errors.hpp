#pragma once

#include <stdexcept>
#include <string>

namespace pbr {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input: malformed config, inconsistent stream metadata, precondition
// violations. Maps to exit code 2 in the CLI.
struct ValidationError : Error {
  using Error::Error;
};

// Request exceeds a documented instance cap (oracle grid size, sweep surface
// count, ...). Exit code 3.
struct ResourceLimitError : Error {
  using Error::Error;
};

// Sync search found no correlation peak above threshold. Exit code 4.
struct NoDetectionError : Error {
  using Error::Error;
};

// Echo synthesis asked for waveform samples before the start of the stream.
struct InsufficientLeadInError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace pbr
