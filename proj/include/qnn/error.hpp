#pragma once

#include <stdexcept>
#include <string>

namespace qnn {

// Exception hierarchy. The CLI maps these onto its exit codes:
// ConfigError -> 1, DataError/ShapeError/DomainError -> 2, InfeasibleError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise out-of-domain numeric input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bit widths, topology, grids, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor extents do not match what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A query has no admissible answer (e.g. no design point meets an error target).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace qnn
