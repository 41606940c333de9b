#pragma once

#include <stdexcept>
#include <string>

namespace riskquant {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/vector dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// Argument outside its mathematical domain (e.g. quantile level not in (0,1)).
struct DomainError : Error {
    using Error::Error;
};

// Malformed or inconsistent caller input (empty dataset, missing twins, ...).
struct InputError : Error {
    using Error::Error;
};

// Loss became non-finite, or a fit could not proceed.
struct TrainingError : Error {
    using Error::Error;
};

// Linear solve failed (singular system).
struct SolverError : Error {
    using Error::Error;
};

// API misuse detected at runtime (e.g. predicting at an unsupported level).
struct UsageError : Error {
    using Error::Error;
};

// Metric undefined on the given inputs (zero-variance truth, empty sample).
struct MetricError : Error {
    using Error::Error;
};

// File input/output failure.
struct IoError : Error {
    using Error::Error;
};

// Configuration file problem; carries the offending field when known.
struct ConfigError : Error {
    explicit ConfigError(const std::string& message, std::string field_name = "")
        : Error(field_name.empty() ? message : field_name + ": " + message),
          field(std::move(field_name)) {}
    std::string field;
};

}  // namespace riskquant
