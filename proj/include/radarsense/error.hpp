#pragma once

#include <stdexcept>
#include <string>

namespace radarsense {

/// Bad input to an operation (precondition violated). CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed file content. Reported as a validation failure by the CLI.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed configuration (e.g. a non-monotone RCS table).
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A run or experiment could not produce a result. CLI exit code 3.
class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation retained no frames.
class EvaluationError : public ExperimentError {
public:
    using ExperimentError::ExperimentError;
};

/// Model output has zero variance, sensitivity indices are undefined.
class DegenerateVarianceError : public ExperimentError {
public:
    using ExperimentError::ExperimentError;
};

/// Division by a zero range or zero noise power.
class SingularityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

} // namespace radarsense
