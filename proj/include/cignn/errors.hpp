#pragma once

#include <stdexcept>
#include <string>

namespace cignn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or axis disagreement between tensors.
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid argument values: negative sigma, window length out of range,
/// asymmetric distance matrices and the like.
struct InputError : Error {
    using Error::Error;
};

/// Malformed files: CSV cells, manifests, checkpoints.
struct ParseError : Error {
    using Error::Error;
};

/// Structurally valid data that cannot support the requested operation:
/// misaligned timestamps, segments too short to window, degenerate series.
struct DataError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace cignn
