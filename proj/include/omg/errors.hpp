#pragma once

#include <stdexcept>
#include <string>

namespace omg {

/// Caller violated an operation precondition (bad value, shape mismatch, ...).
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation invoked against state it cannot work with (stale cache,
/// missing network, forward/backward mismatch).
struct invalid_state : std::logic_error {
    using std::logic_error::logic_error;
};

/// Numerical degeneracy that survived regularization.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file content; message carries the line number where known.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failure (missing file, unwritable path).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace omg
