#pragma once

#include <stdexcept>
#include <string>

namespace catt {

// Base class for all library errors. The CLI maps each subclass to a
// distinct exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/contract violations (dimension mismatch, non-scalar loss, ...).
struct ShapeError : Error {
    using Error::Error;
};

// Invalid run or model configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Bad runtime input: non-finite data, invalid ids, empty batch, invalid
// distribution, nonpositive value in a geometric mean.
struct InputError : Error {
    using Error::Error;
};

// File-system failures.
struct IoError : Error {
    using Error::Error;
};

// Malformed serialized data (JSONL records, config lines).
struct ParseError : Error {
    using Error::Error;
};

// Structural validation failures (CPT row sums, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Zero-probability conditioning cell in a causal estimator.
struct PositivityError : Error {
    using Error::Error;
};

// Checkpoint/model mismatch.
struct CheckpointError : Error {
    using Error::Error;
};

}  // namespace catt
