#pragma once

#include <stdexcept>
#include <string>

namespace igame {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A coefficient was queried outside its declared domain (tabulated knot box).
struct DomainError : Error {
    using Error::Error;
};

/// Caller broke an operation's precondition.
struct PreconditionError : Error {
    using Error::Error;
};

/// Input data is invalid: bad config, failed assumption, misaligned impulse set.
struct ValidationError : Error {
    using Error::Error;
};

/// Config file could not be parsed or carried an unknown key.
struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

/// Explicit time step too large for a monotone update.
struct CflError : ValidationError {
    using ValidationError::ValidationError;
};

/// Lattice transition weights would be negative.
struct NegativeWeightError : ValidationError {
    using ValidationError::ValidationError;
};

/// Impulse actions are not integer multiples of the lattice step.
struct AlignmentError : ValidationError {
    using ValidationError::ValidationError;
};

/// Monte Carlo cost evaluation was asked for a driver it cannot represent.
struct UnsupportedDriverError : ValidationError {
    using ValidationError::ValidationError;
};

/// An obstacle fixed point failed to settle within its iteration cap.
struct ConvergenceError : Error {
    using Error::Error;
};

}  // namespace igame
