#pragma once

#include <stdexcept>
#include <string>

namespace ptycho {

// Error hierarchy shared by the library and the command-line tool.
// The tool maps categories to exit codes: ConfigError (and subclasses) -> 1,
// IoError -> 2, NumericError -> 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Invalid grid/window/stride combinations.
struct GeometryError : ConfigError {
    using ConfigError::ConfigError;
};

// Data outside its admissible domain (negative intensities, size mismatches,
// zero reference fields).
struct DomainError : ConfigError {
    using ConfigError::ConfigError;
};

// Metric preconditions (grid too small for the SSIM window, bad indices).
struct MetricError : ConfigError {
    using ConfigError::ConfigError;
};

struct IoError : Error {
    using Error::Error;
};

// NaN/Inf detected in an optimization state.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace ptycho
