#pragma once

#include <stdexcept>
#include <string>

namespace fedrep {

/// Input matrix is numerically rank deficient (relative singular value
/// cutoff 1e-12 unless stated otherwise).
class RankDeficientError : public std::runtime_error {
 public:
  explicit RankDeficientError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Shapes are incompatible for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// An iterative run produced non-finite values or blew past its guard.
class DivergedError : public std::runtime_error {
 public:
  explicit DivergedError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Bad configuration input; message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace fedrep
