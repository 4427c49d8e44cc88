#pragma once

#include <stdexcept>
#include <string>

namespace perivox {

// Error taxonomy maps onto process exit codes in the CLI:
//   ConfigError -> 2, IoError/DataError -> 3, InsufficientSample -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

// All voxels share one value; Otsu has no split to optimize.
struct DegenerateHistogram : DataError {
  using DataError::DataError;
};

// A sample produced zero usable score records (e.g. no structures present).
struct InsufficientSample : Error {
  using Error::Error;
};

} // namespace perivox
