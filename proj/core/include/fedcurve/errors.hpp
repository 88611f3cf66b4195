#pragma once

#include <stdexcept>
#include <string>

namespace fedcurve {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// mismatched vector dimensions in an operation that requires equal dims
struct DimensionError : Error {
    using Error::Error;
};

// projection (or similar) onto a zero-norm direction
struct DegenerateDirectionError : Error {
    using Error::Error;
};

// argument outside its declared domain, e.g. curve parameter t not in [0,1]
struct RangeError : Error {
    using Error::Error;
};

// invalid value-level precondition (empty batch, non-positive sample, ...)
struct ValueError : Error {
    using Error::Error;
};

// malformed or schema-violating configuration / input file
struct ConfigError : Error {
    using Error::Error;
};

// local curve training produced a non-finite parameter
struct TrainingDivergedError : Error {
    TrainingDivergedError(const std::string& msg, int epoch_index)
        : Error(msg), epoch(epoch_index) {}
    int epoch;
};

// a required origin model version is no longer held in the history window
struct HistoryEvictedError : Error {
    using Error::Error;
};

// the global model became non-finite during aggregation
struct DivergedError : Error {
    using Error::Error;
};

} // namespace fedcurve
