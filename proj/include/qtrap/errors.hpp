#pragma once

#include <stdexcept>
#include <string>

namespace qtrap {

// Base class for every error thrown by this library. CLI maps validation
// errors to exit code 1 and compute errors to exit code 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
    using Error::Error;
};

// Geometry generation exhausted its resample budget.
struct GeometryInfeasible : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

// Two distinct nodes coincide; the long-range coupling diverges.
struct DegenerateGeometry : Error {
    using Error::Error;
};

// An operation requiring one geometry kind was called on another.
struct InvalidGeometry : Error {
    using Error::Error;
};

struct ConvergenceFailure : Error {
    using Error::Error;
};

// A decay rate is negative beyond the roundoff floor; signals solver failure.
struct NonPositiveDecayRate : Error {
    using Error::Error;
};

struct WindowTooNarrow : Error {
    using Error::Error;
};

struct NonPositiveValues : Error {
    using Error::Error;
};

struct InsufficientPoints : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct MissingArtifacts : Error {
    using Error::Error;
};

}  // namespace qtrap
