#ifndef MMAE_ERRORS_HPP
#define MMAE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mmae {

// Invalid configuration or CLI usage. Mapped to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime contract violation on an input (shape mismatch etc.). Exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical-domain failure (zero-norm query, non-finite loss). Exit code 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File system / decode problems. Exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degenerate evaluation input (no ground-truth regions, single-class pixels).
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mmae

#endif
