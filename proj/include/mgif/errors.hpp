#pragma once

#include <stdexcept>
#include <string>

namespace mgif {

// Error taxonomy mapped to CLI exit codes:
//   ConfigError      -> 2
//   IncomparableError-> 3
//   TrainingError    -> 4
// everything else    -> 1

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two artifacts cannot be compared (mismatched reference sets, grids, ...).
struct IncomparableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
    TrainingError(const std::string& msg, int epoch_index)
        : std::runtime_error(msg), epoch(epoch_index) {}
    int epoch;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rank correlation of a constant sequence is undefined.
struct UndefinedCorrelationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mgif
