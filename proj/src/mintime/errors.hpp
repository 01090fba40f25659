#pragma once

#include <stdexcept>
#include <string>

namespace mintime {

// Error taxonomy mirrored by the C API status codes and CLI exit codes:
// config (bad flags/keys/paths), data (invalid manifest or tensor content),
// numeric (non-finite values, degenerate masks, dimension mismatches).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct ShapeError : NumericError {
  using NumericError::NumericError;
};

}  // namespace mintime
