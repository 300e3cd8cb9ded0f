#pragma once

#include <stdexcept>
#include <string>

namespace ndvad {

// Error taxonomy shared by the library, the C API and the CLI.
// The numeric codes double as CLI exit codes.
enum class ErrorKind : int {
  Internal = 1,
  Config = 2,
  Data = 3,
  Numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Invalid configuration: bad keys, out-of-range values, stage-order violations.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::Config, msg) {}
};

// Bad or insufficient data: short clips, empty datasets, corrupt containers.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

// NaN/Inf or other numeric failure states.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(ErrorKind::Numeric, msg) {}
};

// Shape/axis mismatches between tensors.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(ErrorKind::Internal, msg) {}
};

// API misuse (non-scalar loss, invalid argument combinations).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(ErrorKind::Internal, msg) {}
};

}  // namespace ndvad
