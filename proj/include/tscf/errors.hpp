#pragma once

#include <stdexcept>
#include <string>

namespace tscf {

// Error taxonomy. The CLI maps each category to a distinct exit code,
// so library code should throw the most specific type that applies.

// Invalid configuration value (bad hyperparameter, malformed config file).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset ingestion / validation failure (bad CSV row, label out of range).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape mismatch; the message names the offending operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API used out of order (backward before forward, scoring an unfitted forest).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Training aborted (non-finite loss, mutated frozen model).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation-stage failure.
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint / file I/O failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tscf
