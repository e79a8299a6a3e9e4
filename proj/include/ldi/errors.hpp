#pragma once

#include <stdexcept>
#include <string>

namespace ldi {

// Error taxonomy, grouped by how the CLI reports them:
//   ConfigError and friends  -> exit 2 (bad usage / bad configuration / bad input files)
//   ConvergenceError         -> exit 3 (solver failed)
//   DataError and friends    -> exit 4 (trace unusable, fit impossible)

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or structurally broken input file (CSV header/row problems).
struct CsvError : ConfigError {
    using ConfigError::ConfigError;
};

// Raised when the Newton iteration or the timestep controller gives up.
struct ConvergenceError : std::runtime_error {
    double at_time = 0.0;    // seconds into the transient, 0 for DC
    double residual = 0.0;   // worst KCL residual at the point of failure, amperes
    ConvergenceError(const std::string& msg, double t, double res)
        : std::runtime_error(msg), at_time(t), residual(res) {}
};

// Base for "the data cannot support the requested analysis".
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : DataError {
    using DataError::DataError;
};

// Flat or otherwise unidentifiable segment: tau has no meaning here.
struct DegenerateTrace : DataError {
    using DataError::DataError;
};

// Log-domain fitter asked to take the log of a non-positive value.
struct FitDomainError : DataError {
    using DataError::DataError;
};

} // namespace ldi
