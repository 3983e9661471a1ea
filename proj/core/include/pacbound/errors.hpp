#pragma once

#include <stdexcept>
#include <string>

namespace pacbound {

// All library failures derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

// Requested an operation that needs a Schur-stable matrix on an unstable one.
struct StabilityError : Error {
  using Error::Error;
};

// Overflow, loss of precision, or an iteration that failed to converge.
struct NumericError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// A concentration term's denominator is not positive at the requested rate.
struct InadmissibleRateError : Error {
  using Error::Error;
};

// Sampler failed to reach a usable acceptance rate.
struct TuningError : Error {
  using Error::Error;
};

}  // namespace pacbound
