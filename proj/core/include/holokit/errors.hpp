#pragma once

#include <stdexcept>
#include <string>

namespace holokit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes do not match: dimensions, degrees, fiber kinds.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A metric that must be positive definite is not.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Singular matrices, ambiguous ranks, unseparable eigenvalue clusters.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A form (or tuple of forms) is not in the orbit of the model structure,
/// or sits on the orbit boundary.
class OrbitError : public Error {
 public:
  using Error::Error;
};

/// A tangent vector does not lie in the orbit tangent space.
class TangentSpaceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace holokit
