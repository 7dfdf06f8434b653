#pragma once

#include <stdexcept>
#include <string>

namespace i2c {

// Error taxonomy shared by the whole library. The CLI maps these onto
// process exit codes (usage=1, config=2, format=3, numeric=4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller misused an API (non-scalar loss, missing grads, bad subcommand).
struct UsageError : Error {
    using Error::Error;
};

// Invalid configuration value (bad hyper-parameter, impossible shape request).
struct ConfigError : Error {
    using Error::Error;
};

// Well-formed call with unacceptable data (shape mismatch, bad label).
struct InputError : Error {
    using Error::Error;
};

// Out-of-range coordinate or index.
struct BoundsError : InputError {
    using InputError::InputError;
};

// Malformed bytes in a file or stream.
struct FormatError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required (NaN/Inf loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace i2c
