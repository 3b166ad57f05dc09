#pragma once

#include <stdexcept>
#include <string>

namespace fewts {

/// Base of all fewts exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape or rank disagreement between tensor operands.
struct DimensionError : Error {
  using Error::Error;
};

/// Bad or inconsistent configuration (CLI flags, config file, method ids).
struct ConfigError : Error {
  using Error::Error;
};

/// Ingestion, preprocessing, or dataset-contract failures.
struct DataError : Error {
  using Error::Error;
};

/// Non-finite values where finite ones are required (losses, gradients).
struct NumericError : Error {
  using Error::Error;
};

/// A support set with zero entries where the model requires at least one.
struct EmptySupportError : DataError {
  using DataError::DataError;
};

/// Process exit codes used by the CLI, one per error category.
enum class ExitCode : int {
  ok = 0,
  other = 1,
  config = 2,
  data = 3,
  numeric = 4,
};

}  // namespace fewts
