#pragma once

#include <stdexcept>
#include <string>

namespace ggmixer {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimensions do not conform (matmul inner sizes, add width, ...).
struct ShapeError : Error {
  using Error::Error;
};

// A numeric argument violates its contract (eps <= 0, T == 0, ...).
struct ParameterError : Error {
  using Error::Error;
};

// Skeleton edge list refers to joints that do not exist, or repeats bones.
struct TopologyError : Error {
  using Error::Error;
};

// NetworkConfig / TrainConfig / SyntheticSpec field rejected.
struct ConfigError : Error {
  using Error::Error;
};

// An input breaks a stated precondition (asymmetric adjacency, ...).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// API misuse (backward on a tensor that is not on the tape, bad CLI flag).
struct UsageError : Error {
  using Error::Error;
};

// Evaluation horizon cannot be mapped onto the prediction window.
struct ProtocolError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct MagicError : IoError {
  using IoError::IoError;
};

struct VersionError : IoError {
  using IoError::IoError;
};

struct TruncationError : IoError {
  using IoError::IoError;
};

struct DimensionError : IoError {
  using IoError::IoError;
};

}  // namespace ggmixer
