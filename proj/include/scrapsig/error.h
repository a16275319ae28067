#pragma once

#include <stdexcept>
#include <string>

namespace scrapsig {

// Input data cannot support the requested computation (CLI exit code 1).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too few points for a statistic (ols_slope, compute_features, forecasts).
class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

// Bad configuration, missing mapped columns or deflators, unmapped tariff
// prefixes, unsupported model parameters (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scrapsig
