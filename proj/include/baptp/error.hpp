#pragma once

#include <stdexcept>
#include <string>

namespace baptp {

// Error taxonomy shared across all modules. The CLI maps these onto
// distinct process exit codes (see cli/commands.hpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor or layer dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// NaN/Inf surfaced by a kernel, the autodiff tape, or the optimizer.
struct NumericError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed dataset, checkpoint, or report content.
struct DataError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace baptp
