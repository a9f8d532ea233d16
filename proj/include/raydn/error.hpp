// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace raydn {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Point lies on the camera plane (|d| below the degeneracy threshold).
struct DegenerateDepthError : Error {
  using Error::Error;
};

// 4x4 transform is not invertible.
struct SingularTransformError : Error {
  using Error::Error;
};

// Ray requested through a point coincident with the optical center.
struct DegenerateRayError : Error {
  using Error::Error;
};

// Ground-truth center not visible in the requested camera.
struct NotVisibleError : Error {
  using Error::Error;
};

// Tensor or matrix dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

// A bounded search ran out of room (rejection sampling, assignment capacity).
struct CapacityError : Error {
  using Error::Error;
};

// Loss or gradient became non-finite during training.
struct NumericError : Error {
  using Error::Error;
};

// File could not be read or written; message carries the path.
struct IoError : Error {
  using Error::Error;
};

// Serialized artifact does not match the running configuration.
struct VersionError : Error {
  using Error::Error;
};

// Config document malformed, wrong schema version, or unknown keys.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace raydn
