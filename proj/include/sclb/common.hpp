#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sclb {

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (wrong magic, truncation, bad field).
struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Invalid run configuration or invalid argument to an operation.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Non-finite value detected where finite math is required.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

enum class Mode { Train, Eval };

/// Regularization group of a parameter. Fixed at network construction.
enum class ParamGroup { ConvLike, FcLike, NormBias };

inline const char* to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::ConvLike: return "conv_like";
    case ParamGroup::FcLike: return "fc_like";
    case ParamGroup::NormBias: return "norm_bias";
  }
  return "?";
}

}  // namespace sclb
