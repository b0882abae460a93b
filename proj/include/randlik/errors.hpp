#pragma once

#include <stdexcept>
#include <string>

namespace randlik {

// Base class for every error the library raises on contract violations.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched vector/matrix extents between arguments.
struct DimensionError : Error {
    using Error::Error;
};

// Resource limits: too many grid axes, too many nodes, degenerate boxes.
struct CapacityError : Error {
    using Error::Error;
};

// Invalid numeric values: non-finite inputs, out-of-range parameters.
struct DomainError : Error {
    using Error::Error;
};

// A density/potential field was paired with a grid it was not built on.
struct GridMismatchError : Error {
    using Error::Error;
};

// Normalization failures: all mass lost (Z = 0) or overflow while exponentiating.
struct NormalizationError : Error {
    using Error::Error;
};

// Experiment-config file problems: missing file, unknown keys, malformed values.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace randlik
