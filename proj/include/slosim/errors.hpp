#pragma once

#include <stdexcept>
#include <string>

namespace slosim {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyTraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateDataError : FitError {
  using FitError::FitError;
};

struct InsufficientDataError : FitError {
  using FitError::FitError;
};

struct ProfilingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleSloError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleScaleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyDatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace slosim
